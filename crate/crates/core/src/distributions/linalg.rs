use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest diagonal entry are rejected.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Cholesky factor `L` of a symmetric positive-definite matrix `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct SpdFactor {
    lower: DMatrix<f64>,
    log_det: f64,
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower_factor(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Log-determinant of the factorized matrix.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(b.len())?;
        let d = self.dim();
        let mut x = b.clone();
        forward_substitute(self.lower.as_slice(), d, x.as_mut_slice());
        back_substitute_transpose(self.lower.as_slice(), d, x.as_mut_slice());
        Ok(x)
    }

    /// Solves `Lᵀ x = b`. Applied to a standard normal vector this yields a
    /// draw with covariance `A⁻¹`.
    pub fn solve_upper(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(b.len())?;
        let mut x = b.clone();
        back_substitute_transpose(self.lower.as_slice(), self.dim(), x.as_mut_slice());
        Ok(x)
    }

    /// Returns `L Lᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.lower * self.lower.transpose()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {len} against factor of dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Cholesky factorization with an explicit singularity check.
///
/// Only the lower triangle of `matrix` is read; the upper triangle must agree
/// with it up to rounding.
pub fn spd_factorize(matrix: &DMatrix<f64>) -> Result<SpdFactor> {
    let d = matrix.nrows();
    if matrix.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            d,
            matrix.ncols()
        )));
    }
    let scale = matrix.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for j in 0..d {
        for i in (j + 1)..d {
            let (a, b) = (matrix[(i, j)], matrix[(j, i)]);
            if !a.is_finite() || (a - b).abs() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidParameter(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let mut lower = matrix.clone();
    let log_det = cholesky_in_place(lower.as_mut_slice(), d)?;
    for j in 1..d {
        for i in 0..j {
            lower[(i, j)] = 0.0;
        }
    }
    Ok(SpdFactor { lower, log_det })
}

/// In-place left-looking Cholesky on a column-major `d x d` buffer.
///
/// On success the lower triangle holds `L` (the strict upper triangle is
/// untouched) and the log-determinant of the input is returned.
pub(crate) fn cholesky_in_place(a: &mut [f64], d: usize) -> Result<f64> {
    debug_assert_eq!(a.len(), d * d);
    let max_diag = (0..d).fold(0.0_f64, |m, j| m.max(a[j * d + j]));
    let tolerance = PIVOT_TOLERANCE * max_diag;
    let mut log_det = 0.0;
    for j in 0..d {
        for k in 0..j {
            let ljk = a[k * d + j];
            if ljk != 0.0 {
                let (head, tail) = a.split_at_mut(j * d);
                let col_k = &head[k * d + j..k * d + d];
                let col_j = &mut tail[j..d];
                for (cj, ck) in col_j.iter_mut().zip(col_k) {
                    *cj -= ljk * ck;
                }
            }
        }
        let pivot = a[j * d + j];
        if !(pivot > tolerance) || !pivot.is_finite() {
            return Err(Error::Singular {
                index: j,
                pivot,
                tolerance,
            });
        }
        let ljj = pivot.sqrt();
        a[j * d + j] = ljj;
        let inv = 1.0 / ljj;
        for v in &mut a[j * d + j + 1..j * d + d] {
            *v *= inv;
        }
        log_det += 2.0 * ljj.ln();
    }
    Ok(log_det)
}

/// Solves `L y = b` in place; `l` is column-major with `L` in its lower triangle.
pub(crate) fn forward_substitute(l: &[f64], d: usize, b: &mut [f64]) {
    for j in 0..d {
        let yj = b[j] / l[j * d + j];
        b[j] = yj;
        if yj != 0.0 {
            for i in (j + 1)..d {
                b[i] -= l[j * d + i] * yj;
            }
        }
    }
}

/// Solves `Lᵀ x = b` in place.
pub(crate) fn back_substitute_transpose(l: &[f64], d: usize, b: &mut [f64]) {
    for j in (0..d).rev() {
        let col = &l[j * d..j * d + d];
        let mut s = b[j];
        for i in (j + 1)..d {
            s -= col[i] * b[i];
        }
        b[j] = s / col[j];
    }
}
