//! Nearest-neighbor classification, clustering agreement and the split
//! machinery used to report mean ± std errors.

use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{cross_distances, GeodesicConfig};
use crate::metric_learning::{fit, pair_value_grad, LinearTransform, ObjectiveKind, OptimizerConfig};
use crate::optimize::{self, Objective};
use crate::seed;
use crate::surfaces::{BasePointSet, Surface};

/// Majority vote over the `k` nearest training points for every row of
/// `dist` (`n_test × n_train`).
///
/// Distance ties prefer the lower training index. Vote ties go to the tied
/// class whose member comes first in that neighbor order.
pub fn knn_classify(dist: &Array2<f64>, train_labels: &[usize], k: usize) -> Result<Vec<usize>> {
    let n_train = dist.ncols();
    if n_train == 0 || train_labels.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if train_labels.len() != n_train {
        return Err(Error::InvalidArgument("training label count does not match distance columns".into()));
    }
    if k == 0 || k > n_train {
        return Err(Error::InvalidArgument(format!("k = {k} is invalid for {n_train} training points")));
    }
    let mut order: Vec<usize> = Vec::with_capacity(n_train);
    let mut out = Vec::with_capacity(dist.nrows());
    for row in dist.rows() {
        order.clear();
        order.extend(0..n_train);
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        let nearest = &order[..k];
        let mut votes: HashMap<usize, usize> = HashMap::new();
        for &j in nearest {
            *votes.entry(train_labels[j]).or_default() += 1;
        }
        let top = *votes.values().max().expect("k > 0");
        let label = nearest
            .iter()
            .map(|&j| train_labels[j])
            .find(|l| votes[l] == top)
            .expect("a class attains the maximum");
        out.push(label);
    }
    Ok(out)
}

/// Fraction of positions where `pred` and `truth` differ.
pub fn zero_one_error(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.is_empty() || pred.len() != truth.len() {
        return Err(Error::InvalidArgument("predictions and truth must be nonempty and of equal length".into()));
    }
    let wrong = pred.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / pred.len() as f64)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by the arithmetic mean of both entropies.
///
/// When both labelings are constant the two partitions coincide and the
/// result is 1.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::InvalidArgument("labelings must be nonempty and of equal length".into()));
    }
    let n = a.len() as f64;
    let mut ca: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cb: BTreeMap<usize, usize> = BTreeMap::new();
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
        *joint.entry((x, y)).or_default() += 1;
    }
    let ha = entropy(ca.values().copied(), n);
    let hb = entropy(cb.values().copied(), n);
    if ha + hb == 0.0 {
        return Ok(1.0);
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let pxy = c as f64 / n;
            let px = ca[&x] as f64 / n;
            let py = cb[&y] as f64 / n;
            pxy * (pxy / (px * py)).ln()
        })
        .sum();
    Ok((mi / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

/// Mean and spread of a metric over repeated splits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator; 0 for one split).
    pub std: f64,
    pub values: Vec<f64>,
    pub metadata: BTreeMap<String, String>,
}

impl EvalReport {
    pub fn from_values(metric: &str, values: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&values);
        Self { metric: metric.to_string(), mean, std, values, metadata: BTreeMap::new() }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

/// Train/test indices of one holdout split, each sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// `n_splits` stratified random holdout splits. Each class sends
/// `round(test_frac · size)` members to the test side, kept within
/// `1..size`.
pub fn stratified_splits(labels: &[usize], n_splits: usize, test_frac: f64, seed: u64) -> Result<Vec<Split>> {
    if n_splits == 0 || !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::InvalidArgument("need n_splits > 0 and test_frac in (0, 1)".into()));
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        classes.entry(l).or_default().push(i);
    }
    if let Some((l, _)) = classes.iter().find(|(_, m)| m.len() < 2) {
        return Err(Error::CannotStratify(l.to_string()));
    }
    Ok((0..n_splits)
        .map(|s| {
            let mut rng = seed::child_rng(seed, s as u64);
            let mut train = Vec::new();
            let mut test = Vec::new();
            for members in classes.values() {
                let mut shuffled = members.clone();
                shuffled.shuffle(&mut rng);
                let n_test = ((test_frac * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
                test.extend_from_slice(&shuffled[..n_test]);
                train.extend_from_slice(&shuffled[n_test..]);
            }
            train.sort_unstable();
            test.sort_unstable();
            Split { train, test }
        })
        .collect())
}

/// Runs `pipeline` on every split (in parallel) and reports its values.
pub fn split_eval<F>(metric: &str, splits: &[Split], seed: u64, pipeline: F) -> Result<EvalReport>
where
    F: Fn(&Split, u64) -> Result<f64> + Sync,
{
    let values = splits
        .par_iter()
        .enumerate()
        .map(|(s, split)| pipeline(split, seed::derive(seed, [s as u64])))
        .collect::<Result<Vec<f64>>>()?;
    Ok(EvalReport::from_values(metric, values)
        .with_meta("splits", splits.len())
        .with_meta("seed", seed))
}

/// kNN classification on a surface, optionally after learning `L` on the
/// training side of each split.
#[derive(Clone, Debug)]
pub struct KnnPipeline<'a> {
    pub surface: &'a dyn Surface,
    pub geodesic: GeodesicConfig,
    pub learner: Option<(ObjectiveKind, OptimizerConfig)>,
}

impl KnnPipeline<'_> {
    /// Test errors for each `k` in `ks` on one split, sharing the learned
    /// transform.
    pub fn split_errors(&self, points: &BasePointSet, labels: &[usize], split: &Split, seed: u64, ks: &[usize]) -> Result<Vec<f64>> {
        let train = points.subset(&split.train);
        let train_labels: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
        let test_labels: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
        let transform = match &self.learner {
            Some((kind, opt)) => {
                let opt = OptimizerConfig { seed, ..opt.clone() };
                Some(fit(self.surface, &train, &train_labels, *kind, &opt, &self.geodesic)?.transform)
            }
            None => None,
        };
        let test_points: Vec<Vec<f64>> = split.test.iter().map(|&i| points.point(i).to_vec()).collect();
        let dist = cross_distances(self.surface, &test_points, train.points(), transform.as_ref(), &self.geodesic)?;
        ks.iter()
            .map(|&k| zero_one_error(&knn_classify(&dist, &train_labels, k)?, &test_labels))
            .collect()
    }

    /// One report per `k`, all computed from the same splits.
    pub fn evaluate(&self, points: &BasePointSet, labels: &[usize], splits: &[Split], seed: u64, ks: &[usize]) -> Result<Vec<EvalReport>> {
        let per_split = splits
            .par_iter()
            .enumerate()
            .map(|(s, split)| self.split_errors(points, labels, split, seed::derive(seed, [s as u64]), ks))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let learner = match &self.learner {
            Some((ObjectiveKind::Mmc, _)) => "mmc",
            Some((ObjectiveKind::Lmnn, _)) => "lmnn",
            None => "none",
        };
        Ok(ks
            .iter()
            .enumerate()
            .map(|(c, &k)| {
                EvalReport::from_values("knn_error", per_split.iter().map(|v| v[c]).collect())
                    .with_meta("k", k)
                    .with_meta("surface", self.surface.name())
                    .with_meta("transform", learner)
                    .with_meta("splits", splits.len())
                    .with_meta("seed", seed)
            })
            .collect())
    }
}

/// Pair loss `φ(ρ, Y)` with `Y = 1` for same-class pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PairLoss {
    /// `Y ρ + λ (1 − Y) [1 − ρ]_+`.
    Contrastive { lambda: f64 },
    /// Independent of the distance.
    Constant { value: f64 },
}

impl PairLoss {
    fn value(&self, rho: f64, same: bool) -> f64 {
        match *self {
            PairLoss::Contrastive { lambda } => {
                if same {
                    rho
                } else {
                    lambda * (1.0 - rho).max(0.0)
                }
            }
            PairLoss::Constant { value } => value,
        }
    }

    fn slope(&self, rho: f64, same: bool) -> f64 {
        match *self {
            PairLoss::Contrastive { lambda } => {
                if same {
                    1.0
                } else if rho < 1.0 {
                    -lambda
                } else {
                    0.0
                }
            }
            PairLoss::Constant { .. } => 0.0,
        }
    }
}

/// Mean loss over a list of index pairs under transform `L`.
pub fn pair_risk(
    surface: &dyn Surface,
    l: &LinearTransform,
    points: &[Vec<f64>],
    labels: &[usize],
    pairs: &[(usize, usize)],
    loss: &PairLoss,
    geo: &GeodesicConfig,
) -> Result<f64> {
    Ok(risk_and_gradient(surface, l, points, labels, pairs, loss, geo, false)?.0)
}

#[allow(clippy::too_many_arguments)]
fn risk_and_gradient(
    surface: &dyn Surface,
    l: &LinearTransform,
    points: &[Vec<f64>],
    labels: &[usize],
    pairs: &[(usize, usize)],
    loss: &PairLoss,
    geo: &GeodesicConfig,
    want_gradient: bool,
) -> Result<(f64, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no pairs to evaluate".into()));
    }
    let d = l.dim();
    let moved = crate::metric_learning::transform_points(surface, l, points)?;
    let terms = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<(f64, Vec<f64>)> {
            let same = labels[i] == labels[j];
            let mut g = vec![0.0; d * d];
            let (rho, gu, gw) = if want_gradient {
                pair_value_grad(surface, &moved[i], &moved[j], geo, false, 1e-6)?
            } else {
                (crate::geodesic::base_distance(surface, &moved[i], &moved[j], geo)?, vec![], vec![])
            };
            if want_gradient {
                let c = loss.slope(rho, same);
                if c != 0.0 {
                    for a in 0..d {
                        for b in 0..d {
                            g[a * d + b] = c * (gu[a] * points[i][b] + gw[a] * points[j][b]);
                        }
                    }
                }
            }
            Ok((loss.value(rho, same), g))
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = 1.0 / pairs.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; if want_gradient { d * d } else { 0 }];
    for (v, g) in &terms {
        value += v;
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc += gi;
        }
    }
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok((value * scale, grad))
}

struct RiskObjective<'a> {
    surface: &'a dyn Surface,
    points: &'a [Vec<f64>],
    labels: &'a [usize],
    pairs: Vec<(usize, usize)>,
    loss: PairLoss,
    geo: &'a GeodesicConfig,
    dim: usize,
}

impl Objective for RiskObjective<'_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        let l = LinearTransform::from_flat(self.dim, x)?;
        pair_risk(self.surface, &l, self.points, self.labels, &self.pairs, &self.loss, self.geo)
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let l = LinearTransform::from_flat(self.dim, x)?;
        risk_and_gradient(self.surface, &l, self.points, self.labels, &self.pairs, &self.loss, self.geo, true)
    }
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Empirical risk minimizer over all pairs of a sample, started at `L = I`.
pub fn fit_pair_risk(
    surface: &dyn Surface,
    sample: &BasePointSet,
    labels: &[usize],
    loss: &PairLoss,
    opt: &OptimizerConfig,
    geo: &GeodesicConfig,
) -> Result<LinearTransform> {
    let d = surface.base_dim();
    let objective = RiskObjective {
        surface,
        points: sample.points(),
        labels,
        pairs: all_pairs(sample.len()),
        loss: *loss,
        geo,
        dim: d,
    };
    let start = LinearTransform::identity(d).to_flat();
    let descent = optimize::descend(&objective, &start, &opt.line_search, opt.max_iters, opt.rel_tol)?;
    LinearTransform::from_flat(d, &descent.x)
}

/// Risk of `L` on the population pool minus its risk on the training sample.
#[allow(clippy::too_many_arguments)]
pub fn generalization_gap(
    surface: &dyn Surface,
    l: &LinearTransform,
    sample: &BasePointSet,
    sample_labels: &[usize],
    pool: &BasePointSet,
    pool_labels: &[usize],
    pool_pairs: &[(usize, usize)],
    loss: &PairLoss,
    geo: &GeodesicConfig,
) -> Result<f64> {
    let train = pair_risk(surface, l, sample.points(), sample_labels, &all_pairs(sample.len()), loss, geo)?;
    let population = pair_risk(surface, l, pool.points(), pool_labels, pool_pairs, loss, geo)?;
    Ok(population - train)
}

/// Source of i.i.d. labelled base points.
pub trait Sampler: Sync {
    fn sample(&self, rng: &mut seed::Rng, n: usize) -> (Vec<Vec<f64>>, Vec<usize>);
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub m: usize,
    pub mean_gap: f64,
    pub std_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GapConfig {
    pub m_values: Vec<usize>,
    pub n_trials: usize,
    /// Pairs drawn from the pool to estimate the population risk.
    pub pool_pairs: usize,
    pub loss: PairLoss,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            m_values: vec![25, 50, 100, 200, 400],
            n_trials: 20,
            pool_pairs: 50_000,
            loss: PairLoss::Contrastive { lambda: 1.0 },
        }
    }
}

/// For every `m`, fits `L` on `m` fresh samples per trial and measures the
/// gap against a shared pool of `10 · max(m)` points.
pub fn generalization_gap_curve(
    surface: &dyn Surface,
    sampler: &dyn Sampler,
    config: &GapConfig,
    opt: &OptimizerConfig,
    geo: &GeodesicConfig,
    seed: u64,
) -> Result<Vec<GapPoint>> {
    let max_m = *config.m_values.iter().max().ok_or_else(|| Error::InvalidArgument("no m values".into()))?;
    if config.m_values.contains(&0) || config.m_values.contains(&1) || config.n_trials == 0 {
        return Err(Error::InvalidArgument("m values must be at least 2 and n_trials positive".into()));
    }
    let mut rng = seed::child_rng(seed, 0);
    let (pool_points, pool_labels) = sampler.sample(&mut rng, 10 * max_m);
    let pool = BasePointSet::new(pool_points, None)?;
    let n_pool = pool.len();
    let pool_pairs: Vec<(usize, usize)> = if n_pool * (n_pool - 1) / 2 <= config.pool_pairs {
        all_pairs(n_pool)
    } else {
        (0..config.pool_pairs)
            .map(|_| loop {
                let i = rng.random_range(0..n_pool);
                let j = rng.random_range(0..n_pool);
                if i != j {
                    break (i.min(j), i.max(j));
                }
            })
            .collect()
    };
    config
        .m_values
        .iter()
        .enumerate()
        .map(|(mi, &m)| {
            let gaps = (0..config.n_trials)
                .into_par_iter()
                .map(|t| {
                    let mut trial_rng = seed::child_rng(seed, seed::derive(mi as u64 + 1, [t as u64]));
                    let (points, labels) = sampler.sample(&mut trial_rng, m);
                    let sample = BasePointSet::new(points, None)?;
                    let l = fit_pair_risk(surface, &sample, &labels, &config.loss, opt, geo)?;
                    generalization_gap(surface, &l, &sample, &labels, &pool, &pool_labels, &pool_pairs, &config.loss, geo)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean_gap, std_gap) = mean_std(&gaps);
            Ok(GapPoint { m, mean_gap, std_gap })
        })
        .collect()
}
