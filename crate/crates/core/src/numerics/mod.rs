//! Linear algebra, random streams and the optimizers used to train models.

pub mod ga;
pub mod linalg;
pub mod lm;
pub mod pso;
pub mod rng;

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ga::{ga_minimize, GaConfig};
pub use linalg::{least_squares, least_squares_or_ridge, solve_linear, DenseMatrix};
pub use lm::{lm_fit, lm_fit_monitored, LmConfig, LmResult, LmStatus};
pub use pso::{pso_minimize, pso_minimize_seeded, PsoConfig, Swarm};
pub use rng::{RandomStream, RNG_ALGORITHM};

use crate::error::{Error, Result};
use rng::tags;

/// Outcome of a population-based minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub best_point: Vec<f64>,
    pub best_cost: f64,
    /// Best cost after each iteration.
    pub history: Vec<f64>,
}

/// Either metaheuristic, selected by config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Ga(GaConfig),
    Pso(PsoConfig),
}

impl Optimizer {
    pub fn with_bounds(&self, bounds: Vec<(f64, f64)>) -> Optimizer {
        match self {
            Optimizer::Ga(c) => Optimizer::Ga(GaConfig {
                bounds,
                ..c.clone()
            }),
            Optimizer::Pso(c) => Optimizer::Pso(PsoConfig {
                bounds,
                ..c.clone()
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Ga(_) => "ga",
            Optimizer::Pso(_) => "pso",
        }
    }

    pub fn minimize<F>(&self, objective: F) -> Result<OptimResult>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        match self {
            Optimizer::Ga(c) => ga_minimize(objective, c),
            Optimizer::Pso(c) => pso_minimize(objective, c),
        }
    }
}

/// Central-difference gradient `(f(x + h eᵢ) − f(x − h eᵢ)) / 2h`.
pub fn finite_diff_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        let g = (up - down) / (2.0 * h);
        if !g.is_finite() {
            return Err(Error::NonFinite(format!("objective near coordinate {i}")));
        }
        grad.push(g);
    }
    Ok(grad)
}

/// Writes `iteration,best_cost` rows; iterations count from 1.
pub fn write_history_csv(path: &Path, history: &[f64]) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::from("iteration,best_cost\n");
    for (i, c) in history.iter().enumerate() {
        text.push_str(&format!("{},{}\n", i + 1, c));
    }
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Farthest-point traversal: a seeded first pick, then repeatedly the point
/// farthest from every center chosen so far.
pub fn farthest_point_centers(
    points: &[Vec<f64>],
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if count == 0 || count > points.len() {
        return Err(Error::invalid(format!(
            "cannot choose {count} centers from {} points",
            points.len()
        )));
    }
    let mut rng = RandomStream::derive(seed, &[tags::CENTERS]).into_rng();
    let first = rng.random_range(0..points.len());
    let dist =
        |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum() };

    let mut chosen = vec![first];
    let mut nearest: Vec<f64> = points.iter().map(|p| dist(p, &points[first])).collect();
    while chosen.len() < count {
        let next = nearest
            .iter()
            .enumerate()
            .fold(0, |best, (i, &d)| if d > nearest[best] { i } else { best });
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            nearest[i] = nearest[i].min(dist(p, &points[next]));
        }
    }
    Ok(chosen.into_iter().map(|i| points[i].clone()).collect())
}

pub(crate) fn evaluate_all<F>(objective: &F, points: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    points
        .par_iter()
        .map(|p| {
            let c = objective(p);
            if c.is_finite() {
                c
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

pub(crate) fn validate_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::invalid("search box needs at least one dimension"));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!(
                "bound {i} must satisfy low < high, got ({lo}, {hi})"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_square() {
        let g = finite_diff_gradient(|x| x[0] * x[0], &[1.0], 1e-5).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = finite_diff_gradient(|_| 3.0, &[0.1, 0.2, 0.3], 1e-4).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn gradient_of_product() {
        let g = finite_diff_gradient(|x| x[0] * x[1], &[2.0, 3.0], 1e-5).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-7 && (g[1] - 2.0).abs() < 1e-7);
    }

    #[test]
    fn gradient_rejects_bad_step() {
        assert!(finite_diff_gradient(|x| x[0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn farthest_points_spread() {
        let pts: Vec<Vec<f64>> = (0..11).map(|i| vec![i as f64]).collect();
        let c = farthest_point_centers(&pts, 3, 0).unwrap();
        let mut firsts: Vec<f64> = c.iter().map(|p| p[0]).collect();
        firsts.sort_by(f64::total_cmp);
        // any start leads to both ends being picked
        assert!(firsts.contains(&0.0) && firsts.contains(&10.0));
        assert!(farthest_point_centers(&pts, 12, 0).is_err());
    }

    #[test]
    fn optimizer_config_json_shape() {
        let opt: Optimizer =
            serde_json::from_str(r#"{"kind":"pso","population":10,"iterations":5}"#).unwrap();
        match opt {
            Optimizer::Pso(c) => {
                assert_eq!((c.population, c.iterations, c.c1, c.c2), (10, 5, 1.0, 2.0));
            }
            _ => panic!("expected pso"),
        }
    }
}
