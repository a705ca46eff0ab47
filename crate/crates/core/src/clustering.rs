//! k-means driven only by pairwise distances.
//!
//! The cost of an assignment is `Σ_c W_c / |c|`, where `W_c` sums the
//! distances over unordered pairs inside cluster `c`. Points are moved one at
//! a time to whichever cluster lowers the cost most (Hartigan-style), using
//! per-point cluster sums so every candidate move is scored in `O(1)` and
//! applied in `O(n)`.

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Cluster labels in `0..k` with the cost they achieve.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
    cost: f64,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, k: usize, dist: &Array2<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be positive".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidArgument(format!("label {bad} out of range for k = {k}")));
        }
        if dist.dim() != (labels.len(), labels.len()) {
            return Err(Error::InvalidArgument("distance matrix does not match label count".into()));
        }
        let cost = cost_of(&labels, dist);
        Ok(Self { labels, k, cost })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Number of points sharing point `i`'s cluster, `i` included.
pub fn counting(labels: &[usize], i: usize) -> usize {
    labels.iter().filter(|&&l| l == labels[i]).count()
}

/// `Σ_i Σ_j 1[y_i = y_j] ρ_ij / (2 K(y_i))`.
pub fn cost_of(labels: &[usize], dist: &Array2<f64>) -> f64 {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut within = vec![0.0; k];
    let mut size = vec![0usize; k];
    for (i, &li) in labels.iter().enumerate() {
        size[li] += 1;
        for j in i + 1..labels.len() {
            if labels[j] == li {
                within[li] += dist[[i, j]];
            }
        }
    }
    within.iter().zip(&size).filter(|(_, &s)| s > 0).map(|(w, &s)| w / s as f64).sum()
}

/// Elementwise square of a distance matrix.
pub fn squared(dist: &Array2<f64>) -> Array2<f64> {
    dist.mapv(|v| v * v)
}

/// Rejects matrices that are not square, symmetric, nonnegative with a zero
/// diagonal.
pub fn validate_distances(dist: &Array2<f64>) -> Result<()> {
    let (r, c) = dist.dim();
    if r != c {
        return Err(Error::InvalidArgument(format!("distance matrix is {r}×{c}")));
    }
    for i in 0..r {
        if dist[[i, i]] != 0.0 {
            return Err(Error::InvalidArgument(format!("nonzero diagonal at {i}")));
        }
        for j in i + 1..r {
            let (a, b) = (dist[[i, j]], dist[[j, i]]);
            if !a.is_finite() || a < 0.0 {
                return Err(Error::InvalidArgument(format!("entry ({i}, {j}) = {a} is not a distance")));
            }
            if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                return Err(Error::InvalidArgument(format!("asymmetric entries at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_passes: usize,
    /// Square the distances before clustering.
    pub squared: bool,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { k: 2, restarts: 10, max_passes: 100, squared: false, seed: 0 }
    }
}

/// One local search from a fixed initial assignment.
#[derive(Clone, Debug)]
pub struct HartiganRun {
    pub labels: Vec<usize>,
    pub cost: f64,
    /// Cost at the start and after every accepted move.
    pub trace: Vec<f64>,
    pub passes: usize,
    pub converged: bool,
}

fn cluster_term(within: f64, size: usize) -> f64 {
    if size == 0 {
        0.0
    } else {
        within / size as f64
    }
}

/// Cluster sizes, within-cluster sums and per-point cluster sums.
struct SearchState<'a> {
    dist: &'a Array2<f64>,
    k: usize,
    labels: Vec<usize>,
    // sums[i * k + c] = Σ_{j ∈ c, j ≠ i} ρ_ij
    sums: Vec<f64>,
    size: Vec<usize>,
    within: Vec<f64>,
}

impl<'a> SearchState<'a> {
    fn new(dist: &'a Array2<f64>, labels: Vec<usize>, k: usize) -> Self {
        let n = labels.len();
        let mut sums = vec![0.0; n * k];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                sums[i * k + labels[j]] += dist[[i, j]];
            }
        }
        let mut size = vec![0usize; k];
        let mut within = vec![0.0; k];
        for i in 0..n {
            size[labels[i]] += 1;
            within[labels[i]] += 0.5 * sums[i * k + labels[i]];
        }
        Self { dist, k, labels, sums, size, within }
    }

    fn cost(&self) -> f64 {
        (0..self.k).map(|c| cluster_term(self.within[c], self.size[c])).sum()
    }

    /// Cost change from relabelling point `i` to `b`.
    fn delta(&self, i: usize, b: usize) -> f64 {
        let a = self.labels[i];
        if a == b {
            return 0.0;
        }
        let k = self.k;
        cluster_term(self.within[a] - self.sums[i * k + a], self.size[a] - 1) - cluster_term(self.within[a], self.size[a])
            + cluster_term(self.within[b] + self.sums[i * k + b], self.size[b] + 1)
            - cluster_term(self.within[b], self.size[b])
    }

    fn apply(&mut self, i: usize, b: usize) {
        let a = self.labels[i];
        let k = self.k;
        self.within[a] -= self.sums[i * k + a];
        self.within[b] += self.sums[i * k + b];
        self.size[a] -= 1;
        self.size[b] += 1;
        self.labels[i] = b;
        for j in (0..self.labels.len()).filter(|&j| j != i) {
            let d = self.dist[[i, j]];
            self.sums[j * k + a] -= d;
            self.sums[j * k + b] += d;
        }
    }
}

/// Runs single-point moves from `labels` until a pass changes nothing or
/// `max_passes` is reached.
pub fn hartigan(dist: &Array2<f64>, labels: Vec<usize>, k: usize, max_passes: usize) -> HartiganRun {
    let n = labels.len();
    let mut state = SearchState::new(dist, labels, k);
    let mut cost = state.cost();
    let mut trace = vec![cost];
    let mut passes = 0;
    let mut converged = false;

    while passes < max_passes {
        passes += 1;
        let mut moved = false;
        for i in 0..n {
            let a = state.labels[i];
            let mut best = (0.0, a);
            for b in (0..k).filter(|&b| b != a) {
                let delta = state.delta(i, b);
                if delta < best.0 {
                    best = (delta, b);
                }
            }
            let (delta, b) = best;
            if b == a || delta >= -1e-12 * cost.abs().max(1.0) {
                continue;
            }
            state.apply(i, b);
            let next = cost + delta;
            assert!(next < cost, "accepted move did not lower the cost");
            cost = next;
            trace.push(cost);
            moved = true;
        }
        if !moved {
            converged = true;
            break;
        }
    }
    let labels = state.labels;
    let cost = cost_of(&labels, dist);
    HartiganRun { labels, cost, trace, passes, converged }
}

/// Best of `config.restarts` local searches, each from a uniformly random
/// assignment. Restarts run in parallel; ties go to the earliest restart.
pub fn kmeans_fit(dist: &Array2<f64>, config: &KMeansConfig) -> Result<ClusterAssignment> {
    validate_distances(dist)?;
    let n = dist.nrows();
    let k = config.k;
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} is invalid for {n} points")));
    }
    if config.restarts == 0 || config.max_passes == 0 {
        return Err(Error::InvalidArgument("restarts and max_passes must be positive".into()));
    }
    let owned;
    let dist = if config.squared {
        owned = squared(dist);
        &owned
    } else {
        dist
    };
    let runs: Vec<HartiganRun> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::child_rng(config.seed, r as u64);
            let init = (0..n).map(|_| rng.random_range(0..k)).collect();
            hartigan(dist, init, k, config.max_passes)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.cost < best.cost { run } else { best })
        .expect("at least one restart");
    Ok(ClusterAssignment { labels: best.labels, k, cost: best.cost })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid_sq(points: &[Vec<f64>]) -> Array2<f64> {
        Array2::from_shape_fn((points.len(), points.len()), |(i, j)| {
            points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum()
        })
    }

    fn centroid_cost(points: &[Vec<f64>], labels: &[usize]) -> f64 {
        let k = labels.iter().max().unwrap() + 1;
        let d = points[0].len();
        let mut total = 0.0;
        for c in 0..k {
            let members: Vec<&Vec<f64>> = points.iter().zip(labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            let mu: Vec<f64> =
                (0..d).map(|t| members.iter().map(|p| p[t]).sum::<f64>() / members.len() as f64).collect();
            total += members.iter().map(|p| p.iter().zip(&mu).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sum::<f64>();
        }
        total
    }

    #[test]
    fn counting_examples() {
        assert_eq!(counting(&[0, 1, 2], 1), 1);
        assert_eq!(counting(&[3; 7], 4), 7);
        assert_eq!(counting(&[0, 0, 1], 0), 2);
    }

    #[test]
    fn cost_examples() {
        let pts = vec![vec![0.0], vec![2.0]];
        let d = euclid_sq(&pts);
        assert_eq!(cost_of(&[0, 1], &d), 0.0);
        assert!((cost_of(&[0, 0], &d) - 2.0).abs() < 1e-15);
        assert!((cost_of(&[0, 0], &d) - centroid_cost(&pts, &[0, 0])).abs() < 1e-15);
    }

    #[test]
    fn centroid_identity_on_random_instances() {
        let mut rng = seed::rng(30);
        for _ in 0..100 {
            let pts: Vec<Vec<f64>> =
                (0..10).map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
            let labels: Vec<usize> = (0..10).map(|_| rng.random_range(0..3)).collect();
            let a = cost_of(&labels, &euclid_sq(&pts));
            let b = centroid_cost(&pts, &labels);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn k_one_is_fixed() {
        let d = euclid_sq(&[vec![0.0], vec![1.0], vec![5.0]]);
        let a = kmeans_fit(&d, &KMeansConfig { k: 1, restarts: 2, ..Default::default() }).unwrap();
        assert_eq!(a.labels(), &[0, 0, 0]);
        let run = hartigan(&d, vec![0, 0, 0], 1, 10);
        assert_eq!(run.passes, 1);
        assert!(run.converged);
    }

    #[test]
    fn invalid_k() {
        let d = euclid_sq(&[vec![0.0], vec![1.0]]);
        assert!(kmeans_fit(&d, &KMeansConfig { k: 0, ..Default::default() }).is_err());
        assert!(kmeans_fit(&d, &KMeansConfig { k: 3, ..Default::default() }).is_err());
    }

    #[test]
    fn incremental_delta_matches_recomputation() {
        let mut rng = seed::rng(31);
        let n = 12;
        let k = 3;
        for _ in 0..50 {
            let pts: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)]).collect();
            let d = euclid_sq(&pts).mapv(f64::sqrt);
            let init: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let mut state = SearchState::new(&d, init, k);
            for _ in 0..20 {
                let i = rng.random_range(0..n);
                let b = rng.random_range(0..k);
                let before = cost_of(&state.labels, &d);
                let mut moved = state.labels.clone();
                moved[i] = b;
                let want = cost_of(&moved, &d) - before;
                assert!((state.delta(i, b) - want).abs() < 1e-9);
                state.apply(i, b);
                assert!((state.cost() - cost_of(&state.labels, &d)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cost_is_label_permutation_invariant() {
        let mut rng = seed::rng(32);
        let pts: Vec<Vec<f64>> = (0..9).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
        let d = euclid_sq(&pts);
        let labels: Vec<usize> = (0..9).map(|i| i % 3).collect();
        let perm = [2, 0, 1];
        let relabelled: Vec<usize> = labels.iter().map(|&l| perm[l]).collect();
        assert!((cost_of(&labels, &d) - cost_of(&relabelled, &d)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_matrices() {
        let mut d = euclid_sq(&[vec![0.0], vec![1.0]]);
        d[[0, 1]] = 2.0;
        assert!(validate_distances(&d).is_err());
        let mut d = euclid_sq(&[vec![0.0], vec![1.0]]);
        d[[0, 0]] = 1.0;
        assert!(validate_distances(&d).is_err());
    }
}
