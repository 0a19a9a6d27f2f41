//! Levenberg–Marquardt for nonlinear least squares.

use serde::{Deserialize, Serialize};

use super::linalg::{norm_inf, solve_linear, DenseMatrix};
use crate::error::{check_dim, Error, Result};

/// Damping above which no step can make progress.
const LAMBDA_CEILING: f64 = 1e16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub max_iterations: usize,
    pub lambda_init: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Stop once an accepted step lowers the cost by less than
    /// `tolerance · (1 + cost)`.
    pub tolerance: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            max_iterations: 1500,
            lambda_init: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.1,
            tolerance: 1e-10,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_init > 0.0 && self.lambda_init.is_finite()) {
            return Err(Error::invalid("LM lambda_init must be positive"));
        }
        if !(self.lambda_up > 1.0 && 1.0 > self.lambda_down && self.lambda_down > 0.0) {
            return Err(Error::invalid(
                "LM schedule needs lambda_up > 1 > lambda_down > 0",
            ));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid("LM tolerance must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LmStatus {
    Converged,
    MaxIterations,
    /// No step could lower the cost (zero gradient or damping exhausted).
    Stalled,
    /// The caller's monitor asked to stop.
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub cost: f64,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub status: LmStatus,
    /// Cost at the initial point and after every accepted step.
    pub cost_history: Vec<f64>,
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Fits `params` so the residual vector is small in the least-squares sense.
///
/// Each iteration solves `(JᵀJ + λI) δ = −Jᵀr`. A step that lowers the cost is
/// accepted and `λ` shrinks by `lambda_down`; otherwise `λ` grows by
/// `lambda_up` and the step is retried from the same point.
pub fn lm_fit<R, J>(
    residual_fn: R,
    jacobian_fn: J,
    init: &[f64],
    cfg: &LmConfig,
) -> Result<LmResult>
where
    R: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> DenseMatrix,
{
    lm_fit_monitored(residual_fn, jacobian_fn, init, cfg, |_| false)
}

/// [`lm_fit`] that shows every accepted point to `monitor`; returning true
/// ends the fit with [`LmStatus::Stopped`].
pub fn lm_fit_monitored<R, J, M>(
    residual_fn: R,
    jacobian_fn: J,
    init: &[f64],
    cfg: &LmConfig,
    mut monitor: M,
) -> Result<LmResult>
where
    R: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> DenseMatrix,
    M: FnMut(&[f64]) -> bool,
{
    cfg.validate()?;
    let n = init.len();
    let mut x = init.to_vec();
    let mut r = residual_fn(&x);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("residuals at the initial point".into()));
    }
    let mut cost = sum_sq(&r);
    let mut history = vec![cost];
    let mut lambda = cfg.lambda_init;
    let mut iterations = 0;
    let mut accepted = 0;

    if cost == 0.0 {
        return Ok(LmResult {
            params: x,
            cost,
            iterations,
            accepted_steps: accepted,
            status: LmStatus::Converged,
            cost_history: history,
        });
    }

    let mut jac = jacobian_fn(&x);
    check_dim(r.len(), jac.rows())?;
    check_dim(n, jac.cols())?;
    let mut grad = jac.transpose_matvec(&r)?;
    let mut normal = jac.gram();

    let status = loop {
        if norm_inf(&grad) == 0.0 {
            break LmStatus::Stalled;
        }
        if iterations >= cfg.max_iterations {
            break LmStatus::MaxIterations;
        }
        iterations += 1;

        let mut damped = normal.clone();
        for i in 0..n {
            damped[(i, i)] += lambda;
        }
        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let step = match solve_linear(&damped, &neg_grad) {
            Ok(step) => Some(step),
            Err(Error::Singular { .. }) | Err(Error::NonFinite(_)) => None,
            Err(e) => return Err(e),
        };

        let trial = step.and_then(|step| {
            let candidate: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            let res = residual_fn(&candidate);
            let c = sum_sq(&res);
            (c.is_finite() && c < cost).then_some((candidate, res, c))
        });

        match trial {
            Some((candidate, res, new_cost)) => {
                let drop = cost - new_cost;
                x = candidate;
                r = res;
                cost = new_cost;
                history.push(cost);
                accepted += 1;
                lambda = (lambda * cfg.lambda_down).max(f64::MIN_POSITIVE);
                if cost == 0.0 || drop <= cfg.tolerance * (1.0 + cost) {
                    break LmStatus::Converged;
                }
                if monitor(&x) {
                    break LmStatus::Stopped;
                }
                jac = jacobian_fn(&x);
                grad = jac.transpose_matvec(&r)?;
                normal = jac.gram();
            }
            None => {
                lambda *= cfg.lambda_up;
                if lambda > LAMBDA_CEILING {
                    break LmStatus::Stalled;
                }
            }
        }
    };

    Ok(LmResult {
        params: x,
        cost,
        iterations,
        accepted_steps: accepted,
        status,
        cost_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::least_squares;

    fn linear_problem() -> (DenseMatrix, Vec<f64>) {
        let a = DenseMatrix::from_rows(&[
            [2.0, 1.0, 0.0],
            [1.0, 3.0, 1.0],
            [0.0, 1.0, 4.0],
            [1.0, -1.0, 2.0],
            [3.0, 0.5, -1.0],
        ])
        .unwrap();
        let b = vec![1.0, -2.0, 0.5, 3.0, 2.0];
        (a, b)
    }

    #[test]
    fn monitor_can_stop_the_fit() {
        let (a, b) = linear_problem();
        let res = |x: &[f64]| {
            let ax = a.matvec(x).unwrap();
            ax.iter().zip(&b).map(|(u, v)| u - v).collect::<Vec<_>>()
        };
        let mut seen = 0;
        let out = lm_fit_monitored(
            res,
            |_: &[f64]| a.clone(),
            &[5.0, 5.0, 5.0],
            &LmConfig {
                tolerance: 0.0,
                ..LmConfig::default()
            },
            |_| {
                seen += 1;
                true
            },
        )
        .unwrap();
        assert_eq!(out.status, LmStatus::Stopped);
        assert_eq!((out.accepted_steps, seen), (1, 1));
    }

    #[test]
    fn linear_residuals_match_least_squares() {
        let (a, b) = linear_problem();
        let oracle = least_squares(&a, &b).unwrap();
        let cfg = LmConfig {
            max_iterations: 3,
            tolerance: 0.0,
            ..LmConfig::default()
        };
        let res = lm_fit(
            |x| {
                a.matvec(x)
                    .unwrap()
                    .iter()
                    .zip(&b)
                    .map(|(u, v)| u - v)
                    .collect()
            },
            |_| a.clone(),
            &[0.0; 3],
            &cfg,
        )
        .unwrap();
        assert!(res.accepted_steps <= 3);
        for (u, v) in res.params.iter().zip(&oracle) {
            assert!((u - v).abs() < 1e-8, "{u} vs {v}");
        }
        assert!(res.cost_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn exact_root_returned_unchanged() {
        let init = [1.5, -2.0];
        let res = lm_fit(
            |x| vec![x[0] - 1.5, x[1] + 2.0],
            |_| DenseMatrix::identity(2),
            &init,
            &LmConfig::default(),
        )
        .unwrap();
        assert_eq!(res.params, init.to_vec());
        assert_eq!(res.status, LmStatus::Converged);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn zero_jacobian_stalls() {
        let res = lm_fit(
            |_| vec![1.0, 2.0],
            |_| DenseMatrix::zeros(2, 2),
            &[0.3, 0.4],
            &LmConfig::default(),
        )
        .unwrap();
        assert_eq!(res.status, LmStatus::Stalled);
        assert_eq!(res.params, vec![0.3, 0.4]);
    }

    #[test]
    fn rosenbrock_style_nonlinear_fit() {
        // residuals (1 - x, 10 (y - x²)) have their root at (1, 1)
        let res = lm_fit(
            |p| vec![1.0 - p[0], 10.0 * (p[1] - p[0] * p[0])],
            |p| DenseMatrix::from_rows(&[[-1.0, 0.0], [-20.0 * p[0], 10.0]]).unwrap(),
            &[-1.2, 1.0],
            &LmConfig::default(),
        )
        .unwrap();
        assert!((res.params[0] - 1.0).abs() < 1e-6 && (res.params[1] - 1.0).abs() < 1e-6);
        assert!(res.cost_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn non_finite_initial_residual_is_error() {
        let res = lm_fit(
            |_| vec![f64::NAN],
            |_| DenseMatrix::identity(1),
            &[0.0],
            &LmConfig::default(),
        );
        assert!(matches!(res, Err(Error::NonFinite(_))));
    }

    #[test]
    fn bad_schedule_rejected() {
        let cfg = LmConfig {
            lambda_up: 0.5,
            ..LmConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
