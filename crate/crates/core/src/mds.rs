//! Multidimensional scaling onto a surface by raw-stress descent.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesic::GeodesicConfig;
use crate::graph::Dissimilarity;
use crate::metric_learning::{pair_value_grad, OptimizerConfig};
use crate::optimize::{self, DescentStatus, Objective, TraceRow};
use crate::seed;
use crate::surfaces::{BasePointSet, Surface};

const INIT_STD: f64 = 0.1;
const MAX_REINITS: usize = 5;
const COINCIDENT: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Embedding {
    pub points: BasePointSet,
    pub stress: f64,
    pub trace: Vec<TraceRow>,
    pub status: DescentStatus,
    pub tau: f64,
    /// Initializations discarded because the stress was not finite.
    pub reinitializations: usize,
}

struct Stress<'a> {
    surface: &'a dyn Surface,
    target: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    n: usize,
    d: usize,
    geo: &'a GeodesicConfig,
    grad_step: f64,
    seed: u64,
}

impl Stress<'_> {
    fn point<'x>(&self, x: &'x [f64], i: usize) -> &'x [f64] {
        &x[i * self.d..(i + 1) * self.d]
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        for i in 0..self.n {
            let p = self.point(x, i);
            if !self.surface.contains(p) {
                return Err(Error::OutOfDomain(p.to_vec()));
            }
        }
        Ok(())
    }

    /// Residual `ρ − τδ` and endpoint gradients for one pair, nudging `b_j`
    /// off `b_i` when they coincide.
    fn pair_term(&self, x: &[f64], p: usize) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let (i, j) = self.pairs[p];
        let (u, w) = (self.point(x, i), self.point(x, j));
        let (rho, gu, gw) = pair_value_grad(self.surface, u, w, self.geo, false, self.grad_step)?;
        if rho >= COINCIDENT {
            return Ok((rho - self.target[p], gu, gw));
        }
        let mut rng = seed::child_rng(self.seed, p as u64);
        let noise = Normal::new(0.0, 1e-8).expect("valid normal");
        let nudged: Vec<f64> = w.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let (_, gu, gw) = pair_value_grad(self.surface, u, &nudged, self.geo, false, self.grad_step)?;
        Ok((rho - self.target[p], gu, gw))
    }
}

impl Objective for Stress<'_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_domain(x)?;
        let residuals = self
            .pairs
            .par_iter()
            .map(|&(i, j)| {
                crate::geodesic::base_distance(self.surface, self.point(x, i), self.point(x, j), self.geo)
                    .map_err(|e| e.at_pair(i, j))
            })
            .collect::<Result<Vec<f64>>>()?;
        let stress: f64 = residuals.iter().zip(&self.target).map(|(r, t)| (r - t) * (r - t)).sum();
        if stress.is_finite() {
            Ok(stress)
        } else {
            Err(Error::Numerical("non-finite stress".into()))
        }
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_domain(x)?;
        let terms = (0..self.pairs.len())
            .into_par_iter()
            .map(|p| self.pair_term(x, p).map_err(|e| e.at_pair(self.pairs[p].0, self.pairs[p].1)))
            .collect::<Result<Vec<_>>>()?;
        let mut grad = vec![0.0; x.len()];
        let mut stress = 0.0;
        for (&(i, j), (r, gu, gw)) in self.pairs.iter().zip(&terms) {
            stress += r * r;
            for k in 0..self.d {
                grad[i * self.d + k] += 2.0 * r * gu[k];
                grad[j * self.d + k] += 2.0 * r * gw[k];
            }
        }
        if !stress.is_finite() {
            return Err(Error::Numerical("non-finite stress".into()));
        }
        Ok((stress, grad))
    }
}

/// Gaussian start with entries `N(0, 0.1²)`, one RNG stream per node id.
pub fn initial_configuration(ids: &[String], d: usize, seed: u64, attempt: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
    ids.iter()
        .flat_map(|id| {
            let mut rng = seed::rng(seed::derive(seed::keyed(seed, id), [attempt as u64]));
            (0..d).map(move |_| normal.sample(&mut rng)).collect::<Vec<f64>>()
        })
        .collect()
}

/// Minimizes `Σ_{i<j} (ρ(b_i, b_j) − τ δ_ij)²` over the base coordinates.
pub fn mds_embed(
    surface: &dyn Surface,
    delta: &Dissimilarity,
    tau: f64,
    opt: &OptimizerConfig,
    geo: &GeodesicConfig,
    seed: u64,
) -> Result<Embedding> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument("tau must be positive".into()));
    }
    opt.validate()?;
    let n = delta.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty dissimilarity".into()));
    }
    let d = surface.base_dim();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let target = pairs.iter().map(|&(i, j)| tau * delta.matrix()[[i, j]]).collect();
    let objective = Stress { surface, target, pairs, n, d, geo, grad_step: opt.grad_step, seed };

    let mut failures = 0;
    loop {
        let x0 = initial_configuration(&delta.ids, d, seed, failures);
        match objective.value(&x0) {
            Ok(_) => {
                let run = optimize::descend(&objective, &x0, &opt.line_search, opt.max_iters, opt.rel_tol)?;
                let points = BasePointSet::new(run.x.chunks(d).map(<[f64]>::to_vec).collect(), None)?;
                return Ok(Embedding {
                    points,
                    stress: run.final_value(),
                    trace: run.trace,
                    status: run.status,
                    tau,
                    reinitializations: failures,
                });
            }
            Err(e) if failures < MAX_REINITS && (matches!(e, Error::OutOfDomain(_)) || !e.is_input_error()) => {
                failures += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{euclidean_surface, hyperboloid_surface};
    use ndarray::Array2;
    use rand::Rng;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n{i}")).collect()
    }

    #[test]
    fn two_points_embed_exactly() {
        let e = euclidean_surface(2).unwrap();
        let delta = Dissimilarity::new(ids(2), ndarray::array![[0.0, 3.7], [3.7, 0.0]]).unwrap();
        let emb = mds_embed(&e, &delta, 1.0, &OptimizerConfig { max_iters: 500, rel_tol: 1e-14, ..Default::default() }, &GeodesicConfig::default(), 0).unwrap();
        assert!(emb.stress < 1e-12, "{}", emb.stress);
    }

    #[test]
    fn square_is_planar() {
        let e = euclidean_surface(2).unwrap();
        let s = 2f64.sqrt();
        let m = ndarray::array![[0.0, 1.0, s, 1.0], [1.0, 0.0, 1.0, s], [s, 1.0, 0.0, 1.0], [1.0, s, 1.0, 0.0]];
        let delta = Dissimilarity::new(ids(4), m).unwrap();
        let opt = OptimizerConfig { max_iters: 3000, rel_tol: 1e-15, ..Default::default() };
        let emb = mds_embed(&e, &delta, 1.0, &opt, &GeodesicConfig::default(), 1).unwrap();
        assert!(emb.stress < 1e-6, "{}", emb.stress);
        assert!(emb.trace.windows(2).all(|w| w[1].value <= w[0].value));
    }

    #[test]
    fn self_embedding_does_no_worse_than_generator() {
        let h = hyperboloid_surface(2).unwrap();
        let mut rng = seed::rng(50);
        let pts: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let geo = GeodesicConfig::default();
        let m = Array2::from_shape_fn((12, 12), |(i, j)| crate::geodesic::base_distance(&h, &pts[i], &pts[j], &geo).unwrap());
        let m = (&m + &m.t()) * 0.5;
        let delta = Dissimilarity::new(ids(12), m).unwrap();
        let opt = OptimizerConfig { max_iters: 2000, rel_tol: 1e-12, ..Default::default() };
        let stresses: Vec<f64> = (0..4).map(|s| mds_embed(&h, &delta, 1.0, &opt, &geo, s).unwrap().stress).collect();
        // the generating configuration has stress 0; single starts can still land in a local minimum
        let exact = stresses.iter().filter(|&&s| s <= 1e-6).count();
        assert!(exact >= 3, "{stresses:?}");
    }

    #[test]
    fn initialization_is_keyed_by_node_id() {
        let a = initial_configuration(&["x".into(), "y".into()], 2, 9, 0);
        let b = initial_configuration(&["y".into(), "x".into()], 2, 9, 0);
        assert_eq!(&a[..2], &b[2..]);
        assert_eq!(&a[2..], &b[..2]);
    }

    #[test]
    fn rejects_bad_tau() {
        let e = euclidean_surface(1).unwrap();
        let delta = Dissimilarity::new(ids(2), ndarray::array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(mds_embed(&e, &delta, 0.0, &OptimizerConfig::default(), &GeodesicConfig::default(), 0).is_err());
    }
}
