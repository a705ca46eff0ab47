//! Shared fixtures for the benchmarks.

use surfml::geodesic::{random_pairs, GeodesicConfig};
use surfml::surfaces::BasePointSet;

/// Geodesic settings light enough to evaluate many pairs per iteration.
pub fn quick_geodesic() -> GeodesicConfig {
    GeodesicConfig { n_intermediate: 4, n_samples: 8, quadrature_points: 8, max_sweeps: 50, window: 5, rel_tol: 1e-4, seed: 0 }
}

/// `n` points drawn uniformly from the planar ball of radius 2.
pub fn planar_points(n: usize, seed: u64) -> BasePointSet {
    let points = random_pairs(2, n, 2.0, seed).into_iter().map(|(a, _)| a).collect();
    BasePointSet::new(points, None).expect("finite points")
}
