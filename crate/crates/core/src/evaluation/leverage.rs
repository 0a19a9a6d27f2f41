use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numerics::linalg::{DenseMatrix, Lu};

/// Standardized-residual magnitude beyond which a point is an outlier.
pub const RESIDUAL_CUTOFF: f64 = 3.0;
/// Commonly quoted warning leverage for a 98-point, five-input data set.
/// It does not follow from `3(k+1)/n` with five inputs, which gives 18/98.
pub const QUOTED_WARNING_LEVERAGE: f64 = 0.09;

/// Builds the leverage design matrix from input rows, optionally with a
/// leading column of ones.
pub fn design_matrix(inputs: &[Vec<f64>], intercept: bool) -> Result<DenseMatrix> {
    let rows: Vec<Vec<f64>> = inputs
        .iter()
        .map(|x| {
            let mut r = Vec::with_capacity(x.len() + 1);
            if intercept {
                r.push(1.0);
            }
            r.extend_from_slice(x);
            r
        })
        .collect();
    DenseMatrix::from_rows(&rows)
}

/// Diagonal of `X (XᵀX)⁻¹ Xᵀ`.
pub fn hat_diagonal(x: &DenseMatrix) -> Result<Vec<f64>> {
    let (n, k) = (x.rows(), x.cols());
    if k == 0 || n < k {
        return Err(Error::invalid(format!(
            "hat matrix needs at least as many rows as columns, got {n}×{k}"
        )));
    }
    let lu = Lu::factor(&x.gram()).map_err(|e| match e {
        Error::Singular { .. } => {
            Error::RankDeficient(format!("design matrix is rank deficient ({e})"))
        }
        other => other,
    })?;
    (0..n)
        .map(|i| {
            let row = x.row(i);
            let solved = lu.solve(row)?;
            Ok(row.iter().zip(&solved).map(|(a, b)| a * b).sum())
        })
        .collect()
}

/// Indices of a maximal set of linearly independent columns, chosen left to
/// right by Gram–Schmidt. A column is dependent when less than `tol` of its
/// norm survives projection onto the kept ones.
pub fn independent_columns(x: &DenseMatrix, tol: f64) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for j in 0..x.cols() {
        let col: Vec<f64> = (0..x.rows()).map(|i| x[(i, j)]).collect();
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let mut v = col;
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
            }
        }
        let rest = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if rest > tol * norm {
            basis.push(v.iter().map(|a| a / rest).collect());
            kept.push(j);
        }
    }
    kept
}

/// Relative tolerance for dropping collinear design columns.
pub const COLLINEAR_TOLERANCE: f64 = 1e-10;

/// `3(k + 1) / n`.
pub fn warning_leverage(k: usize, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("warning leverage needs n > 0"));
    }
    Ok(3.0 * (k as f64 + 1.0) / n as f64)
}

/// `R_i = e_i / (s √(1 − h_ii))` with `s² = Σe² / (n − k − 1)`. Points with
/// leverage 1 have no defined residual and come back as `None`.
pub fn standardized_residuals(
    y_exp: &[f64],
    y_cal: &[f64],
    h: &[f64],
    k: usize,
) -> Result<Vec<Option<f64>>> {
    check_dim(y_exp.len(), y_cal.len())?;
    check_dim(y_exp.len(), h.len())?;
    let n = y_exp.len();
    if n <= k + 1 {
        return Err(Error::invalid(format!(
            "standardized residuals need n > k + 1, got n = {n}, k = {k}"
        )));
    }
    let errors: Vec<f64> = y_exp.iter().zip(y_cal).map(|(a, b)| a - b).collect();
    let s = (errors.iter().map(|e| e * e).sum::<f64>() / (n - k - 1) as f64).sqrt();
    Ok(errors
        .iter()
        .zip(h)
        .map(|(&e, &hi)| {
            if 1.0 - hi <= 1e-12 {
                None
            } else if e == 0.0 {
                Some(0.0)
            } else {
                Some(e / (s * (1.0 - hi).sqrt()))
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    Valid,
    LeverageOutlier,
    ResidualOutlier,
    LeverageAndResidualOutlier,
}

impl PointFlag {
    pub fn name(self) -> &'static str {
        match self {
            PointFlag::Valid => "valid",
            PointFlag::LeverageOutlier => "leverage_outlier",
            PointFlag::ResidualOutlier => "residual_outlier",
            PointFlag::LeverageAndResidualOutlier => "leverage_and_residual_outlier",
        }
    }

    pub fn is_residual_outlier(self) -> bool {
        matches!(
            self,
            PointFlag::ResidualOutlier | PointFlag::LeverageAndResidualOutlier
        )
    }
}

/// Williams-plot region of each point: valid iff `|R| ≤ 3` and `h ≤ h_star`.
pub fn williams_classify(h: &[f64], r: &[Option<f64>], h_star: f64) -> Result<Vec<PointFlag>> {
    check_dim(h.len(), r.len())?;
    Ok(h.iter()
        .zip(r)
        .map(|(&hi, ri)| {
            let lev = hi > h_star;
            let res = ri.is_some_and(|v| v.abs() > RESIDUAL_CUTOFF);
            match (lev, res) {
                (false, false) => PointFlag::Valid,
                (true, false) => PointFlag::LeverageOutlier,
                (false, true) => PointFlag::ResidualOutlier,
                (true, true) => PointFlag::LeverageAndResidualOutlier,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeverageReport {
    pub n: usize,
    /// Number of input variables.
    pub k: usize,
    pub intercept: bool,
    pub hat_diagonal: Vec<f64>,
    pub standardized_residuals: Vec<Option<f64>>,
    pub warning_leverage: f64,
    pub quoted_warning_leverage: f64,
    pub residual_cutoff: f64,
    pub flags: Vec<PointFlag>,
    /// Design columns left out because they are linear combinations of
    /// earlier ones. The hat matrix does not depend on them.
    #[serde(default)]
    pub dropped_columns: Vec<usize>,
}

impl LeverageReport {
    pub fn residual_outliers(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_residual_outlier())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn leverage_outliers(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                matches!(
                    f,
                    PointFlag::LeverageOutlier | PointFlag::LeverageAndResidualOutlier
                )
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// `index,h,r,flag` rows; an undefined residual is left empty.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "h", "r", "flag"])?;
        for (i, ((h, r), f)) in self
            .hat_diagonal
            .iter()
            .zip(&self.standardized_residuals)
            .zip(&self.flags)
            .enumerate()
        {
            let r = r.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([i.to_string(), h.to_string(), r, f.name().to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Training(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Leverage analysis of predictions over the given input rows.
pub fn leverage_report(
    inputs: &[Vec<f64>],
    y_exp: &[f64],
    y_cal: &[f64],
    intercept: bool,
) -> Result<LeverageReport> {
    check_dim(inputs.len(), y_exp.len())?;
    let x = design_matrix(inputs, intercept)?;
    let k = inputs.first().map_or(0, Vec::len);
    let n = inputs.len();
    let (h, dropped_columns) = match hat_diagonal(&x) {
        Ok(h) => (h, Vec::new()),
        Err(Error::RankDeficient(_)) => {
            let kept = independent_columns(&x, COLLINEAR_TOLERANCE);
            let reduced = DenseMatrix::from_fn(x.rows(), kept.len(), |i, j| x[(i, kept[j])]);
            let dropped = (0..x.cols()).filter(|j| !kept.contains(j)).collect();
            (hat_diagonal(&reduced)?, dropped)
        }
        Err(e) => return Err(e),
    };
    let r = standardized_residuals(y_exp, y_cal, &h, k)?;
    let h_star = warning_leverage(k, n)?;
    let flags = williams_classify(&h, &r, h_star)?;
    Ok(LeverageReport {
        n,
        k,
        intercept,
        hat_diagonal: h,
        standardized_residuals: r,
        warning_leverage: h_star,
        quoted_warning_leverage: QUOTED_WARNING_LEVERAGE,
        residual_cutoff: RESIDUAL_CUTOFF,
        flags,
        dropped_columns,
    })
}
