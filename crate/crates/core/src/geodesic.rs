//! Geodesic distance approximation on arbitrary surfaces.
//!
//! A path between two surface points is represented in the base space as a
//! polyline `a_0, …, a_{n+1}`. Each straight base segment is pushed through
//! the chart and its length integrated with Gauss–Legendre quadrature. The
//! interior waypoints are then improved one at a time by sampling candidates
//! in a ball around each waypoint and keeping the best candidate only when it
//! strictly shortens the two adjacent segments.

use std::cmp::Ordering;

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_learning::LinearTransform;
use crate::quadrature::GaussLegendre;
use crate::seed;
use crate::surfaces::{BasePointSet, Surface};

/// Squared speeds below this are reported instead of clamped.
const NEGATIVE_SPEED_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeodesicConfig {
    /// Interior waypoints `n`.
    pub n_intermediate: usize,
    /// Candidates drawn per waypoint visit `m`.
    pub n_samples: usize,
    pub quadrature_points: usize,
    pub max_sweeps: usize,
    /// Refinement stops once the last `window` sweeps together improved the
    /// total length by less than this fraction.
    pub rel_tol: f64,
    pub window: usize,
    pub seed: u64,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        Self {
            n_intermediate: 16,
            n_samples: 32,
            quadrature_points: 16,
            max_sweeps: 5000,
            rel_tol: 1e-6,
            window: 100,
            seed: 0,
        }
    }
}

impl GeodesicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.quadrature_points == 0 || self.max_sweeps == 0 || self.window == 0 {
            return Err(Error::InvalidArgument(
                "n_samples, quadrature_points, max_sweeps and window must be positive".into(),
            ));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("rel_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Piecewise-linear base-space path with its cached surface length.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPolyline {
    waypoints: Vec<Vec<f64>>,
    cached_length: f64,
}

impl PathPolyline {
    pub fn waypoints(&self) -> &[Vec<f64>] {
        &self.waypoints
    }

    pub fn length(&self) -> f64 {
        self.cached_length
    }

    /// Sum of segment lengths recomputed from scratch.
    pub fn recompute_length(&self, surface: &dyn Surface, quadrature_points: usize) -> Result<f64> {
        let mut seg = SegmentIntegrator::new(surface, quadrature_points);
        self.waypoints.windows(2).map(|w| seg.length(&w[0], &w[1])).sum()
    }

    /// One row per waypoint: base coordinates followed by ambient coordinates.
    pub fn rows(&self, surface: &dyn Surface) -> Vec<Vec<f64>> {
        self.waypoints
            .iter()
            .map(|a| a.iter().copied().chain(surface.map(a)).collect())
            .collect()
    }
}

/// Result of a path refinement run.
#[derive(Clone, Debug)]
pub struct Refinement {
    pub path: PathPolyline,
    pub length: f64,
    /// Total length after initialization and after every accepted move.
    pub trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Fixed-rule integrator reused across many segments.
pub(crate) struct SegmentIntegrator<'a> {
    surface: &'a dyn Surface,
    rule: GaussLegendre,
    point: Vec<f64>,
    velocity: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> SegmentIntegrator<'a> {
    pub(crate) fn new(surface: &'a dyn Surface, quadrature_points: usize) -> Self {
        Self {
            surface,
            rule: GaussLegendre::new(quadrature_points),
            point: vec![0.0; surface.base_dim()],
            velocity: vec![0.0; surface.base_dim()],
            scratch: vec![0.0; surface.ambient_dim()],
        }
    }

    /// `σ(a, b)`; the endpoints are put in a canonical order first, so
    /// `σ(a, b)` and `σ(b, a)` are bit-identical.
    pub(crate) fn length(&mut self, a: &[f64], b: &[f64]) -> Result<f64> {
        let (a, b) = if seed::lex_cmp(a, b) == Ordering::Greater { (b, a) } else { (a, b) };
        for k in 0..a.len() {
            self.velocity[k] = b[k] - a[k];
        }
        if self.velocity.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (t, w) in self.rule.nodes().iter().zip(self.rule.weights()) {
            for k in 0..a.len() {
                self.point[k] = a[k] + t * self.velocity[k];
            }
            let sq = self.surface.speed_squared(&self.point, &self.velocity, &mut self.scratch);
            if sq < -NEGATIVE_SPEED_TOLERANCE || sq.is_nan() {
                return Err(Error::NonLengthlikeSegment { value: sq, t: *t });
            }
            total += w * sq.max(0.0).sqrt();
        }
        Ok(total)
    }
}

/// Length of the image of the straight base segment from `a` to `b`.
pub fn segment_length(surface: &dyn Surface, a: &[f64], b: &[f64], quadrature_points: usize) -> Result<f64> {
    if quadrature_points == 0 {
        return Err(Error::InvalidArgument("quadrature_points must be positive".into()));
    }
    for p in [a, b] {
        if !surface.contains(p) {
            return Err(Error::OutOfDomain(p.to_vec()));
        }
    }
    SegmentIntegrator::new(surface, quadrature_points).length(a, b)
}

/// Uniform sample from the `d`-ball of radius `r` around `center`.
fn sample_ball(rng: &mut seed::Rng, center: &[f64], r: f64, out: &mut [f64]) {
    let d = center.len();
    loop {
        let mut sq = 0.0;
        for o in out.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *o = g;
            sq += g * g;
        }
        if sq > 0.0 {
            let radius = r * rng.random::<f64>().powf(1.0 / d as f64) / sq.sqrt();
            for (o, c) in out.iter_mut().zip(center) {
                *o = c + *o * radius;
            }
            return;
        }
    }
}

fn distance_between(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Refines a path between two base points using the RNG seeded with `seed`.
pub fn refine_base_path(
    surface: &dyn Surface,
    start: &[f64],
    end: &[f64],
    config: &GeodesicConfig,
    seed: u64,
) -> Result<Refinement> {
    config.validate()?;
    for p in [start, end] {
        if !surface.contains(p) {
            return Err(Error::OutOfDomain(p.to_vec()));
        }
    }
    let d = start.len();
    let n = config.n_intermediate;
    let mut rng = seed::rng(seed);
    let max_failures = 100 * config.n_samples;

    if start == end {
        let path = PathPolyline { waypoints: vec![start.to_vec(), end.to_vec()], cached_length: 0.0 };
        return Ok(Refinement { path, length: 0.0, trace: vec![0.0], sweeps: 0, converged: true });
    }

    let mut waypoints = Vec::with_capacity(n + 2);
    waypoints.push(start.to_vec());
    for i in 1..=n {
        let t = i as f64 / (n + 1) as f64;
        let mut a: Vec<f64> = start.iter().zip(end).map(|(s, e)| s + t * (e - s)).collect();
        if !surface.contains(&a) {
            // non-convex base space: perturb the chord point until it lands in B
            let spacing = distance_between(start, end) / (n + 1) as f64;
            let center = a.clone();
            let mut tries = 0;
            while !surface.contains(&a) {
                tries += 1;
                if tries > max_failures {
                    return Err(Error::SamplingExhausted { waypoint: i, draws: tries - 1 });
                }
                let r = spacing * (1.0 + tries as f64 / config.n_samples as f64);
                sample_ball(&mut rng, &center, r, &mut a);
            }
        }
        waypoints.push(a);
    }
    waypoints.push(end.to_vec());

    let mut seg = SegmentIntegrator::new(surface, config.quadrature_points);
    let mut lengths = waypoints
        .windows(2)
        .map(|w| seg.length(&w[0], &w[1]))
        .collect::<Result<Vec<f64>>>()?;
    let mut total: f64 = lengths.iter().sum();
    let mut trace = vec![total];
    let mut candidate = vec![0.0; d];
    let mut best = vec![0.0; d];
    let mut sweeps = 0;
    let mut converged = false;
    let mut history = vec![total];

    while n > 0 && sweeps < config.max_sweeps {
        sweeps += 1;
        for i in 1..=n {
            let r = 2.0
                * distance_between(&waypoints[i], &waypoints[i - 1])
                    .max(distance_between(&waypoints[i], &waypoints[i + 1]));
            if r == 0.0 {
                continue;
            }
            let mut best_len = f64::INFINITY;
            let mut failures = 0;
            let mut drawn = 0;
            while drawn < config.n_samples {
                sample_ball(&mut rng, &waypoints[i], r, &mut candidate);
                if !surface.contains(&candidate) {
                    failures += 1;
                    if failures >= max_failures {
                        return Err(Error::SamplingExhausted { waypoint: i, draws: failures });
                    }
                    continue;
                }
                failures = 0;
                drawn += 1;
                let len = seg.length(&waypoints[i - 1], &candidate)? + seg.length(&candidate, &waypoints[i + 1])?;
                if len < best_len {
                    best_len = len;
                    best.copy_from_slice(&candidate);
                }
            }
            if best_len < lengths[i - 1] + lengths[i] {
                waypoints[i].copy_from_slice(&best);
                lengths[i - 1] = seg.length(&waypoints[i - 1], &waypoints[i])?;
                lengths[i] = seg.length(&waypoints[i], &waypoints[i + 1])?;
                let updated: f64 = lengths.iter().sum();
                debug_assert!(updated <= total, "accepted move increased length: {total} -> {updated}");
                total = updated;
                trace.push(total);
            }
        }
        history.push(total);
        if sweeps >= config.window {
            let before = history[sweeps - config.window];
            if before <= 0.0 || (before - total) / before < config.rel_tol {
                converged = true;
                break;
            }
        }
    }

    let path = PathPolyline { waypoints, cached_length: total };
    Ok(Refinement { path, length: total, trace, sweeps, converged })
}

/// Refines a path between surface points `x` and `y` using `config.seed`.
pub fn refine_path(surface: &dyn Surface, x: &[f64], y: &[f64], config: &GeodesicConfig) -> Result<Refinement> {
    let a = surface.inverse_map(x);
    let b = surface.inverse_map(y);
    refine_base_path(surface, &a, &b, config, config.seed)
}

/// Distance between base points `u` and `w`: the closed form when the surface
/// has one, otherwise a refined path whose RNG stream depends only on the
/// unordered pair.
pub fn base_distance(surface: &dyn Surface, u: &[f64], w: &[f64], config: &GeodesicConfig) -> Result<f64> {
    if surface.has_closed_form() {
        for p in [u, w] {
            if !surface.contains(p) {
                return Err(Error::OutOfDomain(p.to_vec()));
            }
        }
        if let Some(d) = surface.closed_form_distance(&surface.map(u), &surface.map(w)) {
            return Ok(d);
        }
    }
    Ok(canonical_refinement(surface, u, w, config)?.length)
}

fn canonical_refinement(surface: &dyn Surface, u: &[f64], w: &[f64], config: &GeodesicConfig) -> Result<Refinement> {
    let (a, b) = if seed::lex_cmp(u, w) == Ordering::Greater { (w, u) } else { (u, w) };
    refine_base_path(surface, a, b, config, seed::pair_seed(config.seed, a, b))
}

/// Geodesic distance between surface points.
pub fn distance(surface: &dyn Surface, x: &[f64], y: &[f64], config: &GeodesicConfig) -> Result<f64> {
    if surface.has_closed_form() {
        if let Some(d) = surface.closed_form_distance(x, y) {
            return Ok(d);
        }
    }
    let u = surface.inverse_map(x);
    let w = surface.inverse_map(y);
    Ok(canonical_refinement(surface, &u, &w, config)?.length)
}

/// Distance between `F(u)` and `F(w)` together with its gradients in `u` and
/// `w`.
///
/// Closed-form surfaces differentiate the formula. Otherwise the path is
/// refined once and then deformed by dragging one endpoint, with waypoint `i`
/// following with weight `1 − i/(n+1)` (or `i/(n+1)` for the far end). The
/// length of the deformed polyline is differentiated by central differences
/// with per-coordinate step `step·(1 + |x_k|)`. On an exact geodesic this
/// equals the endpoint derivative; on a sampled path it averages out the
/// scatter of individual waypoints.
pub fn base_distance_grad(
    surface: &dyn Surface,
    u: &[f64],
    w: &[f64],
    config: &GeodesicConfig,
    step: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if surface.has_closed_form() {
        if let Some(r) = surface.closed_form_base_grad(u, w) {
            return Ok(r);
        }
    }
    let d = u.len();
    if u == w {
        return Ok((0.0, vec![0.0; d], vec![0.0; d]));
    }
    let refined = canonical_refinement(surface, u, w, config)?;
    let wp = refined.path.waypoints();
    let last = wp.len() - 1;
    let mut seg = SegmentIntegrator::new(surface, config.quadrature_points);
    let mut moved = wp.to_vec();
    let mut drag = |from_start: bool| -> Result<Vec<f64>> {
        let mut g = vec![0.0; d];
        let end = if from_start { &wp[0] } else { &wp[last] };
        for k in 0..d {
            let h = step * (1.0 + end[k].abs());
            let mut lengths = [0.0; 2];
            for (slot, sign) in [(0, 1.0), (1, -1.0)] {
                for (i, (m, orig)) in moved.iter_mut().zip(wp).enumerate() {
                    let t = i as f64 / last as f64;
                    let weight = if from_start { 1.0 - t } else { t };
                    m[k] = orig[k] + sign * weight * h;
                }
                let mut total = 0.0;
                for pair in moved.windows(2) {
                    total += seg.length(&pair[0], &pair[1])?;
                }
                lengths[slot] = total;
            }
            for (m, orig) in moved.iter_mut().zip(wp) {
                m[k] = orig[k];
            }
            g[k] = (lengths[0] - lengths[1]) / (2.0 * h);
        }
        Ok(g)
    };
    let first = drag(true)?;
    let second = drag(false)?;
    // the canonical refinement may have swapped the endpoints
    if wp[0] == u {
        Ok((refined.length, first, second))
    } else {
        Ok((refined.length, second, first))
    }
}

/// Symmetric matrix of `ρ^F_L(x_i, x_j)` over all point pairs.
///
/// Pairs are evaluated in parallel; each pair has its own RNG stream, so the
/// result does not depend on scheduling.
pub fn pairwise_distances(
    surface: &dyn Surface,
    points: &BasePointSet,
    transform: Option<&LinearTransform>,
    config: &GeodesicConfig,
) -> Result<Array2<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no points".into()));
    }
    let moved: Vec<Vec<f64>> = match transform {
        Some(l) => points
            .points()
            .iter()
            .map(|b| {
                let lb = l.apply(b);
                if surface.contains(&lb) { Ok(lb) } else { Err(Error::TransformLeavesDomain(lb)) }
            })
            .collect::<Result<_>>()?,
        None => points.points().to_vec(),
    };
    pairwise_base_distances(surface, &moved, config)
}

/// `rows × cols` matrix of distances between two base point lists, after
/// applying the optional transform to both.
pub fn cross_distances(
    surface: &dyn Surface,
    rows: &[Vec<f64>],
    cols: &[Vec<f64>],
    transform: Option<&LinearTransform>,
    config: &GeodesicConfig,
) -> Result<Array2<f64>> {
    let apply = |pts: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
        pts.iter()
            .map(|b| {
                let lb = transform.map_or_else(|| b.clone(), |l| l.apply(b));
                if surface.contains(&lb) { Ok(lb) } else { Err(Error::TransformLeavesDomain(lb)) }
            })
            .collect()
    };
    let (a, b) = (apply(rows)?, apply(cols)?);
    let cells: Vec<(usize, usize)> = (0..a.len()).flat_map(|i| (0..b.len()).map(move |j| (i, j))).collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| base_distance(surface, &a[i], &b[j], config).map_err(|e| e.at_pair(i, j)))
        .collect::<Result<_>>()?;
    Ok(Array2::from_shape_vec((a.len(), b.len()), values).expect("shape matches cell count"))
}

/// Mean and spread of `approximation / closed form` for one waypoint count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioPoint {
    pub n_intermediate: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// `n_pairs` base-point pairs drawn uniformly from the ball of radius
/// `radius`.
pub fn random_pairs(d: usize, n_pairs: usize, radius: f64, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = seed::rng(seed::keyed(seed, "ratio-pairs"));
    let mut draw = || loop {
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(-radius..radius)).collect();
        if p.iter().map(|x| x * x).sum::<f64>() <= radius * radius {
            break p;
        }
    };
    (0..n_pairs).map(|_| (draw(), draw())).collect()
}

/// Refined length over closed-form distance for each waypoint count, on a
/// surface with a closed form. Coincident pairs are skipped.
pub fn ratio_sweep(
    surface: &dyn Surface,
    pairs: &[(Vec<f64>, Vec<f64>)],
    n_values: &[usize],
    config: &GeodesicConfig,
) -> Result<Vec<RatioPoint>> {
    if !surface.has_closed_form() {
        return Err(Error::InvalidArgument(format!("{} has no closed-form distance to compare against", surface.name())));
    }
    n_values
        .iter()
        .map(|&n| {
            let cfg = GeodesicConfig { n_intermediate: n, ..config.clone() };
            let ratios = pairs
                .par_iter()
                .enumerate()
                .filter(|(_, (u, w))| u != w)
                .map(|(i, (u, w))| {
                    let exact = surface
                        .closed_form_distance(&surface.map(u), &surface.map(w))
                        .expect("closed form available");
                    let r = canonical_refinement(surface, u, w, &cfg).map_err(|e| e.at_pair(i, i))?;
                    Ok(r.length / exact)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let var = ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (ratios.len().max(2) - 1) as f64;
            Ok(RatioPoint {
                n_intermediate: n,
                mean,
                std: var.sqrt(),
                min: ratios.iter().copied().fold(f64::INFINITY, f64::min),
                max: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect()
}

pub(crate) fn pairwise_base_distances(
    surface: &dyn Surface,
    points: &[Vec<f64>],
    config: &GeodesicConfig,
) -> Result<Array2<f64>> {
    let n = points.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| base_distance(surface, &points[i], &points[j], config).map_err(|e| e.at_pair(i, j)))
        .collect::<Result<_>>()?;
    let mut out = Array2::zeros((n, n));
    for (&(i, j), v) in pairs.iter().zip(values) {
        out[[i, j]] = v;
        out[[j, i]] = v;
    }
    Ok(out)
}
