//! Learning a linear transform of the base space.
//!
//! Points move as `b ↦ L b` before the chart is applied, so the surface
//! keeps its shape while distances along it are stretched or compressed:
//! `ρ_L(x_i, x_j) = ρ(F(L b_i), F(L b_j))`. Two objectives are supported,
//! a global pull/push over all labelled pairs (MMC) and a local
//! target-neighbor/imposter hinge (LMNN).

use std::collections::BTreeSet;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{base_distance, base_distance_grad, GeodesicConfig};
use crate::optimize::{self, DescentStatus, LineSearch, Objective, TraceRow};
use crate::surfaces::{BasePointSet, Surface, SurfaceKind};

/// The learnable `d × d` matrix `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearTransform {
    matrix: Array2<f64>,
}

impl LinearTransform {
    pub fn identity(d: usize) -> Self {
        Self { matrix: Array2::eye(d) }
    }

    pub fn from_matrix(matrix: Array2<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidArgument(format!("transform must be square, got {:?}", matrix.dim())));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("transform has non-finite entries".into()));
        }
        Ok(Self { matrix })
    }

    /// Row-major `d × d` entries.
    pub fn from_flat(d: usize, entries: &[f64]) -> Result<Self> {
        let m = Array2::from_shape_vec((d, d), entries.to_vec())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::from_matrix(m)
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.matrix.iter().copied().collect()
    }

    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        self.matrix.dot(&ArrayView1::from(b)).to_vec()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { matrix: &self.matrix * c }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `LᵀL`, the induced quadratic form on the base space.
    pub fn gram(&self) -> Array2<f64> {
        self.matrix.t().dot(&self.matrix)
    }
}

/// Similar (`P`) and dissimilar (`Q`) index pairs, each with `i < j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSets {
    pub similar: Vec<(usize, usize)>,
    pub dissimilar: Vec<(usize, usize)>,
}

pub fn build_pair_sets(labels: &[usize]) -> PairSets {
    let mut similar = Vec::new();
    let mut dissimilar = Vec::new();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            if labels[i] == labels[j] {
                similar.push((i, j));
            } else {
                dissimilar.push((i, j));
            }
        }
    }
    PairSets { similar, dissimilar }
}

/// Target-neighbor relation `j ∼ i` plus `(i, j, l)` triples with `l` an
/// imposter of `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleSet {
    targets: Vec<(usize, usize)>,
    triples: Vec<(usize, usize, usize)>,
}

impl TripleSet {
    pub fn new(targets: Vec<(usize, usize)>, triples: Vec<(usize, usize, usize)>, labels: &[usize]) -> Result<Self> {
        let n = labels.len();
        for &(i, j) in &targets {
            if i >= n || j >= n || i == j || labels[i] != labels[j] {
                return Err(Error::InvalidArgument(format!("({i}, {j}) is not a same-class pair")));
            }
        }
        for &(i, j, l) in &triples {
            if i >= n || j >= n || l >= n || labels[i] != labels[j] || labels[i] == labels[l] {
                return Err(Error::InvalidArgument(format!("({i}, {j}, {l}) is not a valid triple")));
            }
        }
        Ok(Self { targets, triples })
    }

    /// Every target pair combined with every different-class point.
    pub fn complete(targets: &[Vec<usize>], labels: &[usize]) -> Result<Self> {
        let pairs: Vec<(usize, usize)> =
            targets.iter().enumerate().flat_map(|(i, js)| js.iter().map(move |&j| (i, j))).collect();
        let triples = pairs
            .iter()
            .flat_map(|&(i, j)| {
                (0..labels.len()).filter(move |&l| labels[l] != labels[i]).map(move |l| (i, j, l))
            })
            .collect();
        Self::new(pairs, triples, labels)
    }

    pub fn targets(&self) -> &[(usize, usize)] {
        &self.targets
    }

    pub fn triples(&self) -> &[(usize, usize, usize)] {
        &self.triples
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Closed-form derivative where the surface has one, otherwise endpoint
    /// derivatives of the refined paths.
    Auto,
    /// Central differences of the whole objective over the entries of `L`.
    FiniteDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Mmc,
    Lmnn,
}

impl std::str::FromStr for ObjectiveKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mmc" => Ok(ObjectiveKind::Mmc),
            "lmnn" => Ok(ObjectiveKind::Lmnn),
            _ => Err(Error::InvalidArgument(format!("unknown objective `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Push/pull tradeoff.
    pub lambda: f64,
    pub max_iters: usize,
    /// Finite-difference step.
    pub grad_step: f64,
    pub line_search: LineSearch,
    pub rel_tol: f64,
    /// Target neighbors per point (LMNN).
    pub n_target_neighbors: usize,
    /// Imposters kept per target pair, nearest first (LMNN).
    pub max_imposters: usize,
    pub gradient: GradientMode,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            max_iters: 200,
            grad_step: 1e-4,
            line_search: LineSearch::default(),
            rel_tol: 1e-6,
            n_target_neighbors: 3,
            max_imposters: 50,
            gradient: GradientMode::Auto,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.grad_step, self.rel_tol, self.line_search.initial_step, self.line_search.min_step];
        if positive.iter().any(|v| !(*v > 0.0))
            || !(self.lambda >= 0.0 && self.lambda.is_finite())
            || !(self.line_search.shrink > 0.0 && self.line_search.shrink < 1.0)
            || self.n_target_neighbors == 0
            || self.max_imposters == 0
        {
            return Err(Error::InvalidArgument("optimizer parameters must be positive (lambda nonnegative, shrink in (0,1))".into()));
        }
        Ok(())
    }
}

/// Euclidean objectives use squared norms; every other surface uses the
/// geodesic distance itself.
pub(crate) fn uses_squared(surface: &dyn Surface) -> bool {
    surface.kind() == SurfaceKind::Euclidean
}

pub(crate) fn pair_value(surface: &dyn Surface, u: &[f64], w: &[f64], geo: &GeodesicConfig, squared: bool) -> Result<f64> {
    if squared {
        Ok(u.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum())
    } else {
        base_distance(surface, u, w, geo)
    }
}

pub(crate) fn pair_value_grad(
    surface: &dyn Surface,
    u: &[f64],
    w: &[f64],
    geo: &GeodesicConfig,
    squared: bool,
    step: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if squared {
        let diff: Vec<f64> = u.iter().zip(w).map(|(a, b)| a - b).collect();
        let value = diff.iter().map(|x| x * x).sum();
        let gu: Vec<f64> = diff.iter().map(|x| 2.0 * x).collect();
        let gw = gu.iter().map(|x| -x).collect();
        Ok((value, gu, gw))
    } else {
        base_distance_grad(surface, u, w, geo, step)
    }
}

pub(crate) fn transform_points(surface: &dyn Surface, l: &LinearTransform, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .map(|b| {
            let lb = l.apply(b);
            if surface.contains(&lb) { Ok(lb) } else { Err(Error::TransformLeavesDomain(lb)) }
        })
        .collect()
}

/// `ρ^F_L(x_i, x_j) = ρ^F(F(L b_i), F(L b_j))`.
pub fn transformed_distance(
    surface: &dyn Surface,
    l: &LinearTransform,
    b_i: &[f64],
    b_j: &[f64],
    config: &GeodesicConfig,
) -> Result<f64> {
    let moved = transform_points(surface, l, &[b_i.to_vec(), b_j.to_vec()])?;
    base_distance(surface, &moved[0], &moved[1], config)
}

fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

/// `Σ_P ρ_L − λ Σ_Q ρ_L` (squared norms on Euclidean space).
pub fn mmc_objective(
    surface: &dyn Surface,
    l: &LinearTransform,
    points: &BasePointSet,
    pairs: &PairSets,
    lambda: f64,
    config: &GeodesicConfig,
) -> Result<f64> {
    let moved = transform_points(surface, l, points.points())?;
    let squared = uses_squared(surface);
    let eval = |set: &[(usize, usize)]| -> Result<f64> {
        let terms = set
            .par_iter()
            .map(|&(i, j)| pair_value(surface, &moved[i], &moved[j], config, squared).map_err(|e| e.at_pair(i, j)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(sorted_sum(terms))
    };
    Ok(eval(&pairs.similar)? - lambda * eval(&pairs.dissimilar)?)
}

/// `Σ_{j∼i} ρ_L(x_i,x_j) + λ Σ_{(i,j,l)} [1 + ρ_L(x_i,x_j) − ρ_L(x_i,x_l)]_+`.
///
/// Terms are summed in sorted order, so the value does not depend on the
/// order of the triples.
pub fn lmnn_objective(
    surface: &dyn Surface,
    l: &LinearTransform,
    points: &BasePointSet,
    triples: &TripleSet,
    lambda: f64,
    config: &GeodesicConfig,
) -> Result<f64> {
    let moved = transform_points(surface, l, points.points())?;
    let squared = uses_squared(surface);
    let mut needed = BTreeSet::new();
    for &(i, j) in triples.targets() {
        needed.insert((i.min(j), i.max(j)));
    }
    for &(i, j, l) in triples.triples() {
        needed.insert((i.min(j), i.max(j)));
        needed.insert((i.min(l), i.max(l)));
    }
    let needed: Vec<(usize, usize)> = needed.into_iter().collect();
    let values = needed
        .par_iter()
        .map(|&(i, j)| pair_value(surface, &moved[i], &moved[j], config, squared).map_err(|e| e.at_pair(i, j)))
        .collect::<Result<Vec<f64>>>()?;
    let lookup = |i: usize, j: usize| -> f64 {
        let key = (i.min(j), i.max(j));
        values[needed.binary_search(&key).expect("pair evaluated")]
    };
    let pull = sorted_sum(triples.targets().iter().map(|&(i, j)| lookup(i, j)).collect());
    let push = sorted_sum(
        triples
            .triples()
            .iter()
            .map(|&(i, j, l)| (1.0 + lookup(i, j) - lookup(i, l)).max(0.0))
            .collect(),
    );
    Ok(pull + lambda * push)
}

/// Distance matrix over all pairs, symmetric, zero diagonal.
fn value_matrix(surface: &dyn Surface, moved: &[Vec<f64>], geo: &GeodesicConfig, squared: bool) -> Result<Array2<f64>> {
    let n = moved.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let vals = pairs
        .par_iter()
        .map(|&(i, j)| pair_value(surface, &moved[i], &moved[j], geo, squared).map_err(|e| e.at_pair(i, j)))
        .collect::<Result<Vec<f64>>>()?;
    let mut m = Array2::zeros((n, n));
    for (&(i, j), v) in pairs.iter().zip(vals) {
        m[[i, j]] = v;
        m[[j, i]] = v;
    }
    Ok(m)
}

/// For each point, its `k` nearest same-class points under `L = I`
/// (distance ties broken by lower index).
pub fn select_target_neighbors(
    surface: &dyn Surface,
    points: &BasePointSet,
    labels: &[usize],
    k: usize,
    config: &GeodesicConfig,
) -> Result<Vec<Vec<usize>>> {
    if labels.len() != points.len() {
        return Err(Error::InvalidArgument("label count mismatch".into()));
    }
    let dist = value_matrix(surface, points.points(), config, false)?;
    Ok(nearest_same_class(&dist, labels, k))
}

fn nearest_same_class(dist: &Array2<f64>, labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    (0..labels.len())
        .map(|i| {
            let mut same: Vec<usize> = (0..labels.len()).filter(|&j| j != i && labels[j] == labels[i]).collect();
            same.sort_by(|&a, &b| dist[[i, a]].total_cmp(&dist[[i, b]]).then(a.cmp(&b)));
            same.truncate(k);
            same
        })
        .collect()
}

/// LMNN value from a full distance matrix. Imposters are the different-class
/// points with an active hinge, at most `cap` per target pair (nearest
/// first). Returns per-ordered-pair gradient coefficients when requested.
fn lmnn_from_matrix(
    dist: &Array2<f64>,
    targets: &[Vec<usize>],
    labels: &[usize],
    lambda: f64,
    cap: usize,
    want_coefficients: bool,
) -> (f64, Option<Array2<f64>>) {
    let n = labels.len();
    let mut coef = want_coefficients.then(|| Array2::zeros((n, n)));
    let mut pull = Vec::new();
    let mut push = Vec::new();
    for i in 0..n {
        for &j in &targets[i] {
            pull.push(dist[[i, j]]);
            if let Some(c) = coef.as_mut() {
                c[[i, j]] += 1.0;
            }
            let mut active: Vec<(usize, f64)> = (0..n)
                .filter(|&l| labels[l] != labels[i])
                .map(|l| (l, 1.0 + dist[[i, j]] - dist[[i, l]]))
                .filter(|(_, h)| *h > 0.0)
                .collect();
            active.sort_by(|a, b| dist[[i, a.0]].total_cmp(&dist[[i, b.0]]).then(a.0.cmp(&b.0)));
            active.truncate(cap);
            for (l, h) in active {
                push.push(h);
                if let Some(c) = coef.as_mut() {
                    c[[i, j]] += lambda;
                    c[[i, l]] -= lambda;
                }
            }
        }
    }
    (sorted_sum(pull) + lambda * sorted_sum(push), coef)
}

fn mmc_from_matrix(dist: &Array2<f64>, pairs: &PairSets, lambda: f64) -> f64 {
    let p = sorted_sum(pairs.similar.iter().map(|&(i, j)| dist[[i, j]]).collect());
    let q = sorted_sum(pairs.dissimilar.iter().map(|&(i, j)| dist[[i, j]]).collect());
    p - lambda * q
}

enum Terms {
    Mmc(PairSets),
    Lmnn(Vec<Vec<usize>>),
}

struct LearningObjective<'a> {
    surface: &'a dyn Surface,
    points: &'a [Vec<f64>],
    labels: &'a [usize],
    dim: usize,
    terms: Terms,
    squared: bool,
    geo: &'a GeodesicConfig,
    opt: &'a OptimizerConfig,
}

impl LearningObjective<'_> {
    fn transform(&self, x: &[f64]) -> Result<LinearTransform> {
        LinearTransform::from_flat(self.dim, x)
    }

    fn value_from_matrix(&self, dist: &Array2<f64>) -> f64 {
        match &self.terms {
            Terms::Mmc(pairs) => mmc_from_matrix(dist, pairs, self.opt.lambda),
            Terms::Lmnn(targets) => {
                lmnn_from_matrix(dist, targets, self.labels, self.opt.lambda, self.opt.max_imposters, false).0
            }
        }
    }

    fn analytic(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let l = self.transform(x)?;
        let moved = transform_points(self.surface, &l, self.points)?;
        let n = moved.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let evaluated = pairs
            .par_iter()
            .map(|&(i, j)| {
                pair_value_grad(self.surface, &moved[i], &moved[j], self.geo, self.squared, self.opt.grad_step)
                    .map_err(|e| e.at_pair(i, j))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut dist = Array2::zeros((n, n));
        for (&(i, j), (v, _, _)) in pairs.iter().zip(&evaluated) {
            dist[[i, j]] = *v;
            dist[[j, i]] = *v;
        }
        let (value, coef) = match &self.terms {
            Terms::Mmc(ps) => {
                let mut c = Array2::zeros((n, n));
                for &(i, j) in &ps.similar {
                    c[[i, j]] = 1.0;
                }
                for &(i, j) in &ps.dissimilar {
                    c[[i, j]] = -self.opt.lambda;
                }
                (mmc_from_matrix(&dist, ps, self.opt.lambda), c)
            }
            Terms::Lmnn(targets) => {
                let (v, c) =
                    lmnn_from_matrix(&dist, targets, self.labels, self.opt.lambda, self.opt.max_imposters, true);
                (v, c.expect("coefficients requested"))
            }
        };
        let d = self.dim;
        let mut grad = vec![0.0; d * d];
        for (&(i, j), (_, gu, gw)) in pairs.iter().zip(&evaluated) {
            let c = coef[[i, j]] + coef[[j, i]];
            if c == 0.0 {
                continue;
            }
            let (bi, bj) = (&self.points[i], &self.points[j]);
            for a in 0..d {
                for b in 0..d {
                    grad[a * d + b] += c * (gu[a] * bi[b] + gw[a] * bj[b]);
                }
            }
        }
        Ok((value, grad))
    }
}

impl Objective for LearningObjective<'_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        let l = self.transform(x)?;
        let moved = transform_points(self.surface, &l, self.points)?;
        let dist = value_matrix(self.surface, &moved, self.geo, self.squared)?;
        Ok(self.value_from_matrix(&dist))
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self.opt.gradient {
            GradientMode::Auto => self.analytic(x),
            GradientMode::FiniteDifference => {
                let g = optimize::finite_difference_gradient(|p| self.value(p), x, self.opt.grad_step)?;
                Ok((self.value(x)?, g))
            }
        }
    }

    fn project(&self, x: &mut [f64]) {
        if matches!(self.terms, Terms::Mmc(_)) {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                let target = (self.dim as f64).sqrt();
                x.iter_mut().for_each(|v| *v *= target / norm);
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub transform: LinearTransform,
    /// Objective value per accepted iteration, starting at `L = I`.
    pub trace: Vec<TraceRow>,
    pub status: DescentStatus,
    /// Target neighbors used by LMNN.
    pub targets: Option<Vec<Vec<usize>>>,
}

/// Learns `L` from labelled base points, starting at `L = I`.
///
/// MMC rescales `L` to Frobenius norm `√d` after every step, which bounds
/// the otherwise unbounded pull-minus-push objective.
pub fn fit(
    surface: &dyn Surface,
    points: &BasePointSet,
    labels: &[usize],
    kind: ObjectiveKind,
    opt: &OptimizerConfig,
    geo: &GeodesicConfig,
) -> Result<FitResult> {
    opt.validate()?;
    geo.validate()?;
    if labels.len() != points.len() || points.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 labelled points".into()));
    }
    let d = surface.base_dim();
    if points.dim() != d {
        return Err(Error::InvalidArgument(format!("points have dimension {}, surface {d}", points.dim())));
    }
    if let Some(p) = points.points().iter().find(|p| !surface.contains(p)) {
        return Err(Error::OutOfDomain(p.clone()));
    }
    let (terms, targets) = match kind {
        ObjectiveKind::Mmc => (Terms::Mmc(build_pair_sets(labels)), None),
        ObjectiveKind::Lmnn => {
            let t = select_target_neighbors(surface, points, labels, opt.n_target_neighbors, geo)?;
            (Terms::Lmnn(t.clone()), Some(t))
        }
    };
    let objective = LearningObjective {
        surface,
        points: points.points(),
        labels,
        dim: d,
        terms,
        squared: uses_squared(surface),
        geo,
        opt,
    };
    let start = LinearTransform::identity(d).to_flat();
    let descent = optimize::descend(&objective, &start, &opt.line_search, opt.max_iters, opt.rel_tol)?;
    Ok(FitResult {
        transform: LinearTransform::from_flat(d, &descent.x)?,
        trace: descent.trace,
        status: descent.status,
        targets,
    })
}
