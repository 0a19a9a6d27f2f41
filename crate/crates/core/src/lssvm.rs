//! Least-squares support vector regression with a Gaussian (RBF) kernel.
//!
//! Training solves the dual system
//!
//! ```text
//! [ 0   1ᵀ        ] [b]   [0]
//! [ 1   K + I/γ   ] [a] = [y]
//! ```
//!
//! with `K_ij = exp(−‖x_i − x_j‖² / σ²)`. The fitted function is
//! `f(x) = Σ a_k k(x, x_k) + b`, and the training residuals are `a_k / γ`.

use serde::{Deserialize, Serialize};

use crate::dataset::{split_indices, Samples, Scaler};
use crate::error::{check_dim, Error, Result};
use crate::numerics::linalg::{solve_linear, DenseMatrix};
use crate::numerics::rng::tags;
use crate::numerics::{OptimResult, Optimizer};

/// Regularization and kernel width from the reference GA-tuned model.
pub const REFERENCE_GAMMA: f64 = 6942.0845;
pub const REFERENCE_SIGMA2: f64 = 8.01234;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LssvmHyper {
    pub gamma: f64,
    pub sigma2: f64,
}

impl Default for LssvmHyper {
    fn default() -> Self {
        LssvmHyper {
            gamma: REFERENCE_GAMMA,
            sigma2: REFERENCE_SIGMA2,
        }
    }
}

impl LssvmHyper {
    pub fn new(gamma: f64, sigma2: f64) -> Result<Self> {
        let h = LssvmHyper { gamma, sigma2 };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma2 must be positive, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LssvmModel {
    pub gamma: f64,
    pub sigma2: f64,
    pub bias: f64,
    pub support_values: Vec<f64>,
    pub train_inputs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<Scaler>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

#[inline]
fn kernel_unchecked(x: &[f64], xk: &[f64], sigma2: f64) -> f64 {
    (-squared_distance(x, xk) / sigma2).exp()
}

/// `exp(−‖x_k − x‖² / σ²)`.
pub fn rbf_kernel(x: &[f64], x_k: &[f64], sigma2: f64) -> Result<f64> {
    check_dim(x.len(), x_k.len())?;
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("kernel width sigma2 must be positive"));
    }
    if x.iter().chain(x_k).any(|v| !v.is_finite()) || !sigma2.is_finite() {
        return Err(Error::NonFinite("kernel arguments".into()));
    }
    Ok(kernel_unchecked(x, x_k, sigma2))
}

/// Symmetric Gram matrix of the kernel over `inputs`.
pub fn kernel_matrix(inputs: &[Vec<f64>], sigma2: f64) -> DenseMatrix {
    let n = inputs.len();
    let mut k = DenseMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let v = kernel_unchecked(&inputs[i], &inputs[j], sigma2);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn validate_samples(samples: &Samples) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::invalid("LSSVM training needs at least one sample"));
    }
    let d = samples.dim();
    for row in &samples.inputs {
        check_dim(d, row.len())?;
    }
    if samples
        .inputs
        .iter()
        .flatten()
        .chain(&samples.targets)
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("training data".into()));
    }
    Ok(())
}

/// Fits support values and bias by solving the dual system directly.
pub fn train(samples: &Samples, hyper: LssvmHyper) -> Result<LssvmModel> {
    hyper.validate()?;
    validate_samples(samples)?;
    let n = samples.len();
    let kernel = kernel_matrix(&samples.inputs, hyper.sigma2);

    let mut system = DenseMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        system[(0, i + 1)] = 1.0;
        system[(i + 1, 0)] = 1.0;
        for j in 0..n {
            system[(i + 1, j + 1)] = kernel[(i, j)];
        }
        system[(i + 1, i + 1)] += 1.0 / hyper.gamma;
    }
    let mut rhs = Vec::with_capacity(n + 1);
    rhs.push(0.0);
    rhs.extend_from_slice(&samples.targets);

    let solution = solve_linear(&system, &rhs).map_err(|e| match e {
        Error::Singular { condition, .. } => Error::Training(format!(
            "LSSVM dual system is singular (pivot ratio estimate {condition:e}); \
             try a larger gamma or a different kernel width"
        )),
        other => other,
    })?;

    Ok(LssvmModel {
        gamma: hyper.gamma,
        sigma2: hyper.sigma2,
        bias: solution[0],
        support_values: solution[1..].to_vec(),
        train_inputs: samples.inputs.clone(),
        scaler: None,
    })
}

impl LssvmModel {
    pub fn hyper(&self) -> LssvmHyper {
        LssvmHyper {
            gamma: self.gamma,
            sigma2: self.sigma2,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.train_inputs.first().map_or(0, Vec::len)
    }

    /// `Σ a_k k(x, x_k) + b`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self
            .support_values
            .iter()
            .zip(&self.train_inputs)
            .map(|(a, xk)| a * kernel_unchecked(x, xk, self.sigma2))
            .sum::<f64>()
            + self.bias)
    }

    pub fn predict_many(&self, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        inputs.iter().map(|x| self.predict(x)).collect()
    }

    /// Training residuals `e_k = a_k / γ`.
    pub fn training_errors(&self) -> Vec<f64> {
        self.support_values.iter().map(|a| a / self.gamma).collect()
    }
}

pub fn predict(m: &LssvmModel, x: &[f64]) -> Result<f64> {
    m.predict(x)
}

/// Box for the hyperparameter search; searched in log10 space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LssvmBounds {
    pub gamma: (f64, f64),
    pub sigma2: (f64, f64),
}

impl Default for LssvmBounds {
    fn default() -> Self {
        LssvmBounds {
            gamma: (1e-2, 1e7),
            sigma2: (1e-3, 1e3),
        }
    }
}

impl LssvmBounds {
    fn log_box(&self) -> Result<Vec<(f64, f64)>> {
        for (name, (lo, hi)) in [("gamma", self.gamma), ("sigma2", self.sigma2)] {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} bounds must be positive with low < high, got ({lo}, {hi})"
                )));
            }
        }
        Ok(vec![
            (self.gamma.0.log10(), self.gamma.1.log10()),
            (self.sigma2.0.log10(), self.sigma2.1.log10()),
        ])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub hyper: LssvmHyper,
    pub model: LssvmModel,
    /// Validation MSE at the chosen hyperparameters.
    pub validation_mse: f64,
    pub search: OptimResult,
}

fn mse(pred: &[f64], target: &[f64]) -> f64 {
    pred.iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / target.len() as f64
}

/// Searches `(log γ, log σ²)` for the lowest validation MSE, then retrains
/// on `train` with the winner.
pub fn tune(
    train_set: &Samples,
    validation: &Samples,
    optimizer: &Optimizer,
    bounds: &LssvmBounds,
) -> Result<TuneOutcome> {
    validate_samples(train_set)?;
    validate_samples(validation)?;
    check_dim(train_set.dim(), validation.dim())?;
    let optimizer = optimizer.with_bounds(bounds.log_box()?);

    let objective = |p: &[f64]| {
        let hyper = LssvmHyper {
            gamma: 10f64.powf(p[0]),
            sigma2: 10f64.powf(p[1]),
        };
        match train(train_set, hyper).and_then(|m| m.predict_many(&validation.inputs)) {
            Ok(pred) => mse(&pred, &validation.targets),
            Err(_) => f64::INFINITY,
        }
    };
    let search = optimizer.minimize(objective)?;
    let hyper = LssvmHyper {
        gamma: 10f64.powf(search.best_point[0]),
        sigma2: 10f64.powf(search.best_point[1]),
    };
    let model = train(train_set, hyper)?;
    Ok(TuneOutcome {
        hyper,
        model,
        validation_mse: search.best_cost,
        search,
    })
}

/// Default tuning protocol: validation MSE on an inner 80/20 split of the
/// training partition; the final model is refitted on all of `train_set`.
pub fn tune_inner_split(
    train_set: &Samples,
    optimizer: &Optimizer,
    bounds: &LssvmBounds,
    seed: u64,
) -> Result<TuneOutcome> {
    let (fit_idx, val_idx) = split_indices(train_set.len(), 0.8, seed ^ tags::INNER_SPLIT)?;
    let fit = train_set.subset(&fit_idx);
    let val = train_set.subset(&val_idx);
    let mut out = tune(&fit, &val, optimizer, bounds)?;
    out.model = train(train_set, out.hyper)?;
    Ok(out)
}
