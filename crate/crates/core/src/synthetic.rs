//! Seeded built-in datasets.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::eval::Sampler;
use crate::graph::GraphDataset;
use crate::seed;
use crate::surfaces::BasePointSet;

/// Two ribbons on the helicoid `(u, v) ↦ (u cos v, u sin v, v)`: class 0 has
/// `u ∈ [0.3, 1.5]`, class 1 has `u ∈ [−1.5, −0.3]`, both with
/// `v ∈ [0, 4π]`. In ambient space they wind around each other.
pub fn helicoid_two_clusters(n: usize, seed: u64) -> (BasePointSet, Vec<usize>) {
    let mut rng = seed::rng(seed::keyed(seed, "helicoid-two-clusters"));
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let points = labels
        .iter()
        .map(|&l| {
            let r = rng.random_range(0.3..1.5);
            let u = if l == 0 { r } else { -r };
            vec![u, rng.random_range(0.0..4.0 * std::f64::consts::PI)]
        })
        .collect();
    (BasePointSet::new(points, Some(labels.clone())).expect("finite points"), labels)
}

/// Two isotropic Gaussian classes in the plane, centred at `(±separation/2, 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPairs {
    pub separation: f64,
    pub spread: f64,
}

impl Default for GaussianPairs {
    fn default() -> Self {
        Self { separation: 1.0, spread: 0.5 }
    }
}

impl Sampler for GaussianPairs {
    fn sample(&self, rng: &mut seed::Rng, n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let points = labels
            .iter()
            .map(|&l| {
                let c = if l == 0 { -0.5 } else { 0.5 } * self.separation;
                let x: f64 = StandardNormal.sample(rng);
                let y: f64 = StandardNormal.sample(rng);
                vec![c + self.spread * x, self.spread * y]
            })
            .collect();
        (points, labels)
    }
}

/// Random graph with planted groups: each node expects `intra` neighbors
/// inside its group and `inter` outside. Resamples until connected.
pub fn planted_partition(name: &str, sizes: &[usize], intra: &[f64], inter: &[f64], seed: u64) -> Result<GraphDataset> {
    if sizes.len() != intra.len() || sizes.len() != inter.len() || sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidArgument("group sizes and degrees must align and be positive".into()));
    }
    let group: Vec<usize> = sizes.iter().enumerate().flat_map(|(g, &s)| std::iter::repeat_n(g, s)).collect();
    let n = group.len();
    for attempt in 0..100u64 {
        let mut rng = seed::rng(seed::derive(seed::keyed(seed, name), [attempt]));
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let (gi, gj) = (group[i], group[j]);
                let p = if gi == gj {
                    intra[gi] / (sizes[gi] - 1).max(1) as f64
                } else {
                    // average of both endpoints' outside rates
                    0.5 * (inter[gi] / (n - sizes[gi]) as f64 + inter[gj] / (n - sizes[gj]) as f64)
                };
                if rng.random::<f64>() < p.min(1.0) {
                    edges.push((i, j));
                }
            }
        }
        let g = GraphDataset::new(
            name,
            (0..n as i64).collect(),
            (0..n).map(|i| Some(format!("{name}-{i:03}"))).collect(),
            group.iter().map(usize::to_string).collect(),
            edges,
        )?;
        if g.components().len() == 1 {
            return Ok(g);
        }
    }
    Err(Error::Numerical(format!("could not draw a connected `{name}` graph")))
}

/// Group sizes of the 115-team college football network.
pub const FOOTBALL_CONFERENCES: [usize; 12] = [9, 8, 11, 12, 10, 5, 13, 8, 10, 12, 7, 10];

/// Stand-in for the college football network: 115 nodes in 12 groups, about
/// 7 in-group and 3.7 cross-group games per team. Group 5 plays almost only
/// cross-group games.
pub fn football_like(seed: u64) -> GraphDataset {
    let intra: Vec<f64> = (0..12).map(|g| if g == 5 { 0.2 } else { 7.0 }).collect();
    let inter: Vec<f64> = (0..12).map(|g| if g == 5 { 10.0 } else { 3.7 }).collect();
    planted_partition("football", &FOOTBALL_CONFERENCES, &intra, &inter, seed).expect("football-like graph")
}

/// Stand-in for a subsample of the 20 Newsgroups corpus: `n` documents in
/// 20 topics, linked mostly within topic.
pub fn newsgroups_like(n: usize, seed: u64) -> Result<GraphDataset> {
    let base = n / 20;
    if base < 2 {
        return Err(Error::InvalidArgument("need at least 40 documents".into()));
    }
    let sizes: Vec<usize> = (0..20).map(|g| base + usize::from(g < n % 20)).collect();
    planted_partition("newsgroups", &sizes, &[4.0; 20], &[2.0; 20], seed)
}
