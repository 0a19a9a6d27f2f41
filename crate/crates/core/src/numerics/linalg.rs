//! Small dense linear algebra: row-major matrices, LU with partial pivoting,
//! and normal-equation least squares.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Relative pivot threshold below which a matrix is treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim(cols, r.as_ref().len())?;
            data.extend_from_slice(r.as_ref());
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.cols, x.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_dim(self.cols, other.rows)?;
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `AᵀA`, exploiting symmetry.
    pub fn gram(&self) -> DenseMatrix {
        let k = self.cols;
        let mut g = DenseMatrix::zeros(k, k);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..k {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                for j in i..k {
                    g[(i, j)] += ri * row[j];
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                g[(i, j)] = g[(j, i)];
            }
        }
        g
    }

    /// `Aᵀb`.
    pub fn transpose_matvec(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.rows, b.len())?;
        let mut out = vec![0.0; self.cols];
        for (r, &br) in b.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += a * br;
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// LU factorization with partial (row) pivoting, `PA = LU`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: a.cols(),
            });
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let threshold = PIVOT_TOLERANCE * a.max_abs().max(f64::MIN_POSITIVE);
        let mut max_pivot: f64 = 0.0;

        for k in 0..n {
            let (p, pivot_abs) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            max_pivot = max_pivot.max(pivot_abs);
            if pivot_abs <= threshold {
                return Err(Error::Singular {
                    step: k,
                    pivot: pivot_abs,
                    condition: if pivot_abs > 0.0 {
                        max_pivot / pivot_abs
                    } else {
                        f64::INFINITY
                    },
                });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == 0.0 {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    /// Ratio of the largest to the smallest pivot magnitude.
    pub fn pivot_ratio(&self) -> f64 {
        let n = self.lu.rows();
        let (lo, hi) = (0..n).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
            let p = self.lu[(i, i)].abs();
            (lo.min(p), hi.max(p))
        });
        if n == 0 {
            1.0
        } else {
            hi / lo
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lu.rows();
        check_dim(n, b.len())?;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .map(|(u, v)| u * v)
                .sum();
            x[i] = (x[i] - s) / row[i];
        }
        Ok(x)
    }
}

/// Solves the square system `Ax = b` by partial-pivoting elimination.
pub fn solve_linear(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_dim(a.rows(), b.len())?;
    Lu::factor(a)?.solve(b)
}

/// Minimizes `‖Ax − b‖₂` through the normal equations `AᵀA x = Aᵀb`.
pub fn least_squares(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_dim(a.rows(), b.len())?;
    if a.rows() < a.cols() {
        return Err(Error::RankDeficient(format!(
            "{} rows cannot determine {} unknowns",
            a.rows(),
            a.cols()
        )));
    }
    let gram = a.gram();
    let rhs = a.transpose_matvec(b)?;
    match solve_linear(&gram, &rhs) {
        Ok(x) => Ok(x),
        Err(Error::Singular { step, .. }) => Err(Error::RankDeficient(format!(
            "normal matrix lost rank at column {step}"
        ))),
        Err(e) => Err(e),
    }
}

/// Ridge-regularized normal equations `(AᵀA + λI) x = Aᵀb`.
pub fn ridge_least_squares(a: &DenseMatrix, b: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_dim(a.rows(), b.len())?;
    let mut gram = a.gram();
    for i in 0..gram.rows() {
        gram[(i, i)] += lambda;
    }
    let rhs = a.transpose_matvec(b)?;
    solve_linear(&gram, &rhs)
}

/// Least squares that falls back to a ridge fit when the normal matrix is
/// rank deficient. The flag reports whether the fallback was used.
pub fn least_squares_or_ridge(a: &DenseMatrix, b: &[f64], lambda: f64) -> Result<(Vec<f64>, bool)> {
    match least_squares(a, b) {
        Ok(x) => Ok((x, false)),
        Err(Error::RankDeficient(_)) => ridge_least_squares(a, b, lambda).map(|x| (x, true)),
        Err(e) => Err(e),
    }
}

/// Cholesky factor `L` with `A = LLᵀ`; fails if `A` is not positive definite.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::Singular {
                step: j,
                pivot: d,
                condition: f64::INFINITY,
            });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RandomStream;
    use rand::Rng;

    #[test]
    fn identity_system_returns_rhs() {
        let x = solve_linear(&DenseMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn diagonal_system_by_hand() {
        let a = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]).unwrap();
        let x = solve_linear(&a, &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rank_one_matrix_is_singular() {
        let a = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            solve_linear(&a, &[1.0, 2.0]),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn non_square_rejected() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(solve_linear(&a, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_pivot_needs_row_swap() {
        let a = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let x = solve_linear(&a, &[3.0, 5.0]).unwrap();
        assert_eq!(x, vec![5.0, 3.0]);
    }

    #[test]
    fn random_well_conditioned_systems_meet_residual_bound() {
        for trial in 0..100u64 {
            let mut rng = RandomStream::new(11, trial).into_rng();
            let n = rng.random_range(1..=50);
            // Diagonal dominance keeps the condition number moderate.
            let a = DenseMatrix::from_fn(n, n, |i, j| {
                let v: f64 = rng.random_range(-1.0..1.0);
                if i == j {
                    v + n as f64 * 1.5
                } else {
                    v
                }
            });
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let x = solve_linear(&a, &b).unwrap();
            let ax = a.matvec(&x).unwrap();
            let resid: Vec<f64> = ax.iter().zip(&b).map(|(u, v)| u - v).collect();
            assert!(norm_inf(&resid) <= 1e-8 * (1.0 + norm_inf(&b)));
        }
    }

    #[test]
    fn least_squares_identity_returns_rhs() {
        let b = [0.5, -2.0, 7.25];
        let x = least_squares(&DenseMatrix::identity(3), &b).unwrap();
        for (u, v) in x.iter().zip(b) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn least_squares_recovers_exact_line() {
        // y = 2x + 1 sampled at five points, columns (x, 1)
        let xs = [-2.0, -0.5, 0.0, 1.5, 3.0];
        let a = DenseMatrix::from_fn(5, 2, |i, j| if j == 0 { xs[i] } else { 1.0 });
        let b: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let coef = least_squares(&a, &b).unwrap();
        assert!((coef[0] - 2.0).abs() < 1e-9);
        assert!((coef[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn duplicated_columns_are_rank_deficient() {
        let a = DenseMatrix::from_fn(6, 2, |i, _| i as f64 + 0.5);
        let b = [1.0; 6];
        assert!(matches!(
            least_squares(&a, &b),
            Err(Error::RankDeficient(_))
        ));
        let (x, fell_back) = least_squares_or_ridge(&a, &b, 1e-8).unwrap();
        assert!(fell_back);
        assert!(x.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let l = cholesky(&a).unwrap();
        let back = l.matmul(&l.transpose()).unwrap();
        for (u, v) in back.as_slice().iter().zip(a.as_slice()) {
            assert!((u - v).abs() < 1e-14);
        }
        let indefinite = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(cholesky(&indefinite).is_err());
    }
}
