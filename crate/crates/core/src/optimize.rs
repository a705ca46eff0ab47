//! Normalized gradient descent with backtracking, shared by metric learning
//! and embedding.

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// A differentiable objective over a flat parameter vector.
pub trait Objective {
    fn value(&self, x: &[f64]) -> Result<f64>;

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;

    /// Maps a trial point back onto the feasible set (e.g. a norm sphere).
    fn project(&self, _x: &mut [f64]) {}
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSearch {
    pub initial_step: f64,
    pub shrink: f64,
    pub min_step: f64,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self { initial_step: 0.1, shrink: 0.5, min_step: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub value: f64,
    /// Step length taken to reach this value (0 for the starting point).
    pub step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentStatus {
    /// Relative improvement fell below tolerance.
    Converged,
    /// Line search reached the minimum step after at least one accepted step.
    Stalled,
    /// Line search failed on the very first iteration; the start is returned.
    NoDescentDirection,
    /// Gradient vanished.
    Stationary,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct Descent {
    pub x: Vec<f64>,
    pub trace: Vec<TraceRow>,
    pub status: DescentStatus,
}

impl Descent {
    pub fn final_value(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.value)
    }
}

/// Minimizes `objective` from `x0`.
///
/// Each iteration moves along `−∇f/‖∇f‖`, so the step is a distance in
/// parameter space. The trial step starts at twice the last accepted step and
/// is shrunk until the (projected) trial point strictly lowers the objective;
/// trial points where the objective errors or is non-finite count as
/// failures. The recorded trace is therefore strictly decreasing.
pub fn descend<O: Objective + ?Sized>(
    objective: &O,
    x0: &[f64],
    search: &LineSearch,
    max_iters: usize,
    rel_tol: f64,
) -> Result<Descent> {
    let mut x = x0.to_vec();
    objective.project(&mut x);
    let (mut fx, mut grad) = objective.value_and_gradient(&x)?;
    let mut trace = vec![TraceRow { iteration: 0, value: fx, step: 0.0 }];
    let mut step = search.initial_step;
    let mut status = DescentStatus::MaxIterations;

    for iteration in 1..=max_iters {
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !(gnorm > 0.0) || !gnorm.is_finite() {
            status = DescentStatus::Stationary;
            break;
        }
        let mut trial_step = (2.0 * step).max(search.min_step);
        let mut accepted = None;
        while trial_step >= search.min_step {
            let mut trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - trial_step * gi / gnorm).collect();
            objective.project(&mut trial);
            if let Ok(ft) = objective.value(&trial) {
                if ft.is_finite() && ft < fx {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            trial_step *= search.shrink;
        }
        let Some((trial, ft)) = accepted else {
            status = if iteration == 1 { DescentStatus::NoDescentDirection } else { DescentStatus::Stalled };
            break;
        };
        let improvement = (fx - ft) / fx.abs().max(f64::MIN_POSITIVE);
        step = trial_step;
        x = trial;
        fx = ft;
        trace.push(TraceRow { iteration, value: fx, step });
        if improvement < rel_tol {
            status = DescentStatus::Converged;
            break;
        }
        if iteration < max_iters {
            let (v, g) = objective.value_and_gradient(&x)?;
            // keep the recorded value if a non-deterministic objective disagrees
            fx = fx.min(v);
            grad = g;
        }
    }
    Ok(Descent { x, trace, status })
}

/// Central finite-difference gradient with absolute step `h`.
pub fn finite_difference_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let fp = f(&probe)?;
        probe[k] = x[k] - h;
        let fm = f(&probe)?;
        probe[k] = x[k];
        g[k] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic;
    impl Objective for Quadratic {
        fn value(&self, x: &[f64]) -> Result<f64> {
            Ok((x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2))
        }
        fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            Ok((self.value(x)?, vec![2.0 * (x[0] - 3.0), 20.0 * (x[1] + 1.0)]))
        }
    }

    #[test]
    fn finds_quadratic_minimum() {
        let d = descend(&Quadratic, &[0.0, 0.0], &LineSearch::default(), 2000, 1e-14).unwrap();
        assert!((d.x[0] - 3.0).abs() < 1e-3 && (d.x[1] + 1.0).abs() < 1e-3, "{:?}", d.x);
        assert!(d.trace.windows(2).all(|w| w[1].value < w[0].value));
    }

    #[test]
    fn stationary_start() {
        let d = descend(&Quadratic, &[3.0, -1.0], &LineSearch::default(), 10, 1e-9).unwrap();
        assert_eq!(d.status, DescentStatus::Stationary);
        assert_eq!(d.trace.len(), 1);
    }

    struct Ascent;
    impl Objective for Ascent {
        fn value(&self, x: &[f64]) -> Result<f64> {
            Ok(x[0])
        }
        fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            // deliberately wrong sign
            Ok((x[0], vec![-1.0]))
        }
    }

    #[test]
    fn no_descent_direction_returns_start() {
        let d = descend(&Ascent, &[1.0], &LineSearch::default(), 10, 1e-9).unwrap();
        assert_eq!(d.status, DescentStatus::NoDescentDirection);
        assert_eq!(d.x, vec![1.0]);
    }

    #[test]
    fn fd_gradient() {
        let g = finite_difference_gradient(|x| Quadratic.value(x), &[1.0, 1.0], 1e-4).unwrap();
        assert!((g[0] + 4.0).abs() < 1e-8 && (g[1] - 40.0).abs() < 1e-6);
    }
}
