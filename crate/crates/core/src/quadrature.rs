//! Gauss–Legendre rules mapped to `[0, 1]`.

use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[0, 1]`, exact for polynomials of degree `2n − 1`.
    ///
    /// Roots of `P_n` are found by Newton iteration from Chebyshev guesses;
    /// only the lower half is computed and mirrored, so the rule is exactly
    /// symmetric under `t ↦ 1 − t`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 1.0 / ((1.0 - x * x) * dp * dp);
            // x is the root in (0, 1]; map to [0, 1] and mirror
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 1.0 - nodes[i];
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.5;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(t, w)| w * f(*t)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for n in 1..=40 {
            let q = GaussLegendre::new(n);
            let s: f64 = q.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-13, "n={n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        for n in 1..=20 {
            let q = GaussLegendre::new(n);
            for deg in 0..(2 * n) {
                let got = q.integrate(|t| t.powi(deg as i32));
                let want = 1.0 / (deg as f64 + 1.0);
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn symmetric_nodes() {
        for n in 1..=17 {
            let q = GaussLegendre::new(n);
            for i in 0..n {
                assert!((q.nodes()[i] - (1.0 - q.nodes()[n - 1 - i])).abs() < 1e-15);
                assert_eq!(q.weights()[i], q.weights()[n - 1 - i]);
            }
        }
    }

    #[test]
    fn known_two_point_rule() {
        let q = GaussLegendre::new(2);
        let off = 0.5 / 3f64.sqrt();
        assert!((q.nodes()[0] - (0.5 - off)).abs() < 1e-15);
        assert!((q.weights()[0] - 0.5).abs() < 1e-15);
    }
}
