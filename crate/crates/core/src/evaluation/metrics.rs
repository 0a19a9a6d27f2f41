use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Test,
    Total,
    All,
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Partition::Train => "train",
            Partition::Test => "test",
            Partition::Total => "total",
            Partition::All => "all",
        };
        f.write_str(s)
    }
}

/// Error metrics of predictions against measurements. A metric is `None`
/// where its formula is undefined for the given data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub partition: Partition,
    pub n: usize,
    pub mse: f64,
    pub rmse: f64,
    /// Mean of `|y_exp − y_cal| / y_exp`, times 100. Undefined if any
    /// measurement is zero.
    pub ard_percent: Option<f64>,
    /// `ard_percent / 100`.
    pub mre: Option<f64>,
    /// Mean absolute error, in target units.
    pub mae: f64,
    /// Undefined when the measurements are constant.
    pub r2: Option<f64>,
    /// Root of the squared-error sum over `n − 1`. Undefined for `n = 1`.
    pub std: Option<f64>,
}

pub fn metrics(y_exp: &[f64], y_cal: &[f64], partition: Partition) -> Result<MetricsReport> {
    check_dim(y_exp.len(), y_cal.len())?;
    if y_exp.is_empty() {
        return Err(Error::invalid("metrics need at least one point"));
    }
    if !y_exp.iter().chain(y_cal).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("metric inputs".into()));
    }
    let n = y_exp.len();
    let nf = n as f64;
    let errors: Vec<f64> = y_exp.iter().zip(y_cal).map(|(e, c)| e - c).collect();
    let sse: f64 = errors.iter().map(|e| e * e).sum();
    let mse = sse / nf;
    let mae = errors.iter().map(|e| e.abs()).sum::<f64>() / nf;

    let ard_percent = if y_exp.contains(&0.0) {
        None
    } else {
        Some(
            100.0 / nf
                * errors
                    .iter()
                    .zip(y_exp)
                    .map(|(e, y)| e.abs() / y)
                    .sum::<f64>(),
        )
    };

    let mean = y_exp.iter().sum::<f64>() / nf;
    let spread: f64 = y_exp.iter().map(|y| (y - mean) * (y - mean)).sum();
    let r2 = (spread > 0.0).then(|| 1.0 - sse / spread);
    let std = (n >= 2).then(|| (sse / (nf - 1.0)).sqrt());

    Ok(MetricsReport {
        partition,
        n,
        mse,
        rmse: mse.sqrt(),
        ard_percent,
        mre: ard_percent.map(|a| a / 100.0),
        mae,
        r2,
        std,
    })
}
