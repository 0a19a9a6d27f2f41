//! Gaussian radial-basis-function network with one global width.
//!
//! `f(x) = Σ_p w_p · exp(−‖x − c_p‖² / (2σ²))`

use serde::{Deserialize, Serialize};

use crate::dataset::Samples;
use crate::error::{check_dim, Error, Result};
use crate::numerics::linalg::{least_squares_or_ridge, solve_linear, DenseMatrix};
use crate::numerics::{farthest_point_centers, lm_fit, LmConfig, LmResult};

pub const DEFAULT_CENTERS: usize = 50;
pub const RIDGE_LAMBDA: f64 = 1e-8;

pub fn rbf_activation(r: f64, sigma: f64) -> f64 {
    (-(r * r) / (2.0 * sigma * sigma)).exp()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfModel {
    pub centers: Vec<Vec<f64>>,
    pub sigma: f64,
    pub weights: Vec<f64>,
}

impl RbfModel {
    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(Error::invalid("RBF network needs at least one center"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "RBF width must be positive, got {}",
                self.sigma
            )));
        }
        check_dim(self.centers.len(), self.weights.len())?;
        let d = self.input_dim();
        for c in &self.centers {
            check_dim(d, c.len())?;
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.centers.first().map_or(0, Vec::len)
    }

    fn activations(&self, x: &[f64]) -> Vec<f64> {
        self.centers
            .iter()
            .map(|c| rbf_activation(distance(x, c), self.sigma))
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self
            .activations(x)
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| a * w)
            .sum())
    }

    pub fn predict_many(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        inputs.iter().map(|x| self.predict(x)).collect()
    }
}

/// N×m matrix of activations of every input against every center.
pub fn activation_matrix(inputs: &[Vec<f64>], centers: &[Vec<f64>], sigma: f64) -> DenseMatrix {
    DenseMatrix::from_fn(inputs.len(), centers.len(), |q, p| {
        rbf_activation(distance(&inputs[q], &centers[p]), sigma)
    })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "RBF width must be positive, got {sigma}"
        )))
    }
}

/// One center per training point; solves `Φ w = t` exactly.
pub fn train_interpolation(samples: &Samples, sigma: f64) -> Result<RbfModel> {
    check_sigma(sigma)?;
    if samples.is_empty() {
        return Err(Error::invalid("RBF training set is empty"));
    }
    let centers = samples.inputs.clone();
    let phi = activation_matrix(&samples.inputs, &centers, sigma);
    let weights = solve_linear(&phi, &samples.targets).map_err(|e| match e {
        Error::Singular { .. } => Error::Training(format!(
            "interpolation matrix is singular ({e}); remove duplicate input rows or use a larger sigma"
        )),
        other => other,
    })?;
    Ok(RbfModel {
        centers,
        sigma,
        weights,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbfTrainOutcome {
    pub model: RbfModel,
    /// True when the least-squares fit fell back to a ridge solve.
    pub ridge_fallback: bool,
    pub refinement: Option<LmResult>,
}

/// Mean distance from each center to its nearest neighbour.
pub fn mean_nearest_center_distance(centers: &[Vec<f64>]) -> Option<f64> {
    if centers.len() < 2 {
        return None;
    }
    let total: f64 = centers
        .iter()
        .enumerate()
        .map(|(i, a)| {
            centers
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| distance(a, b))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Some(total / centers.len() as f64)
}

fn fit_weights(samples: &Samples, centers: &[Vec<f64>], sigma: f64) -> Result<(Vec<f64>, bool)> {
    let phi = activation_matrix(&samples.inputs, centers, sigma);
    least_squares_or_ridge(&phi, &samples.targets, RIDGE_LAMBDA)
}

/// `m_centers` centers chosen by farthest-point traversal, weights by least
/// squares. Without an explicit width the mean nearest-neighbour distance
/// between centers is used (1.0 for a single center).
pub fn train_centers(
    samples: &Samples,
    m_centers: usize,
    sigma: Option<f64>,
    seed: u64,
) -> Result<RbfTrainOutcome> {
    if m_centers == 0 || m_centers > samples.len() {
        return Err(Error::invalid(format!(
            "center count must be in 1..={}, got {m_centers}",
            samples.len()
        )));
    }
    let centers = farthest_point_centers(&samples.inputs, m_centers, seed)?;
    let sigma = match sigma {
        Some(s) => s,
        None => match mean_nearest_center_distance(&centers) {
            Some(d) if d > 0.0 => d,
            _ => 1.0,
        },
    };
    check_sigma(sigma)?;
    let (weights, ridge_fallback) = fit_weights(samples, &centers, sigma)?;
    Ok(RbfTrainOutcome {
        model: RbfModel {
            centers,
            sigma,
            weights,
        },
        ridge_fallback,
        refinement: None,
    })
}

/// Levenberg–Marquardt on `ln σ` with the weights re-fitted by least squares
/// at every trial width. Centers stay fixed.
pub fn refine_sigma(
    model: &RbfModel,
    samples: &Samples,
    cfg: &LmConfig,
) -> Result<RbfTrainOutcome> {
    model.validate()?;
    check_dim(model.input_dim(), samples.dim())?;
    let centers = &model.centers;
    let residuals = |p: &[f64]| -> Vec<f64> {
        let sigma = p[0].exp();
        match fit_weights(samples, centers, sigma) {
            Ok((w, _)) => {
                let phi = activation_matrix(&samples.inputs, centers, sigma);
                let pred = phi.matvec(&w).expect("shapes agree");
                samples
                    .targets
                    .iter()
                    .zip(&pred)
                    .map(|(t, y)| t - y)
                    .collect()
            }
            Err(_) => vec![f64::NAN; samples.len()],
        }
    };
    let jacobian = |p: &[f64]| -> DenseMatrix {
        let h = 1e-6;
        let up = residuals(&[p[0] + h]);
        let down = residuals(&[p[0] - h]);
        DenseMatrix::from_fn(up.len(), 1, |i, _| (up[i] - down[i]) / (2.0 * h))
    };
    let result = lm_fit(residuals, jacobian, &[model.sigma.ln()], cfg)?;
    let sigma = result.params[0].exp();
    let (weights, ridge_fallback) = fit_weights(samples, centers, sigma)?;
    Ok(RbfTrainOutcome {
        model: RbfModel {
            centers: centers.clone(),
            sigma,
            weights,
        },
        ridge_fallback,
        refinement: Some(result),
    })
}
