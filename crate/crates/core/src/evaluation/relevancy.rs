use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset};
use crate::error::{check_dim, Error, Result};

/// Pearson correlation between one input column and the target.
pub fn relevancy_factor(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(Error::invalid("relevancy factor needs at least two points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let denom = (sxx * syy).sqrt();
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateColumn(
            "relevancy factor is undefined for a constant column".into(),
        ));
    }
    Ok((sxy / denom).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRelevancy {
    pub column: Column,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevancyReport {
    pub n: usize,
    pub factors: Vec<InputRelevancy>,
}

impl RelevancyReport {
    pub fn get(&self, column: Column) -> Option<f64> {
        self.factors
            .iter()
            .find(|f| f.column == column)
            .map(|f| f.r)
    }

    /// Input with the largest `|r|`.
    pub fn strongest(&self) -> Option<&InputRelevancy> {
        self.factors
            .iter()
            .max_by(|a, b| a.r.abs().total_cmp(&b.r.abs()))
    }
}

/// Relevancy of every input column to the target of `data`.
pub fn relevancy_report(data: &Dataset) -> Result<RelevancyReport> {
    let y = data.targets()?;
    let factors = Column::INPUTS
        .iter()
        .map(|&c| {
            let x = data.column(c).expect("input columns are always present");
            relevancy_factor(&x, &y)
                .map(|r| InputRelevancy { column: c, r })
                .map_err(|e| match e {
                    Error::DegenerateColumn(_) => Error::DegenerateColumn(c.name().to_string()),
                    other => other,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RelevancyReport {
        n: data.len(),
        factors,
    })
}
