use nalgebra::DMatrix;

use crate::distributions::cholesky_in_place;
use crate::error::{Error, Result};

/// Ridge parameter `max(1/p, ε)`.
pub fn default_lambda(p: usize, epsilon: f64) -> f64 {
    (1.0 / p as f64).max(epsilon)
}

/// `tr(XᵀX)`, i.e. the squared Frobenius norm of `X`.
pub fn trace_xtx(x: &DMatrix<f64>) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Variable-selection coefficient that preserves the trace of the prior
/// precision of the classical g-prior with coefficient `tau0`:
/// `τ⁻¹ tr(XᵀX) + λp = τ₀⁻¹ tr(XᵀX)`.
pub fn calibrate_tau(tau0: f64, trace_xtx: f64, p: usize, lambda: f64) -> Result<f64> {
    if !(tau0 > 0.0 && tau0.is_finite()) {
        return Err(Error::Calibration(format!(
            "tau0 must be positive, got {tau0}"
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::Calibration(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(trace_xtx > 0.0) {
        return Err(Error::Calibration(format!(
            "tr(X'X) must be positive, got {trace_xtx}"
        )));
    }
    let shift = lambda * p as f64 * tau0;
    if trace_xtx.is_infinite() {
        return Ok(tau0);
    }
    if shift >= trace_xtx {
        return Err(Error::Calibration(format!(
            "lambda * p * tau0 = {shift} is not below tr(X'X) = {trace_xtx}; lower tau0"
        )));
    }
    Ok(tau0 * trace_xtx / (trace_xtx - shift))
}

/// Inverse prior covariance `Σ_γ(λ)⁻¹ = τ⁻¹ X_γᵀX_γ + λI`.
pub fn ridge_prior_precision(x_active: &DMatrix<f64>, tau: f64, lambda: f64) -> DMatrix<f64> {
    scaled_gram_plus_ridge(x_active, 1.0 / tau, lambda)
}

/// Inverse posterior covariance `V_γ⁻¹ = ((1+τ)/τ) X_γᵀX_γ + λI`.
pub fn posterior_coef_precision(x_active: &DMatrix<f64>, tau: f64, lambda: f64) -> DMatrix<f64> {
    scaled_gram_plus_ridge(x_active, (1.0 + tau) / tau, lambda)
}

fn scaled_gram_plus_ridge(x: &DMatrix<f64>, scale: f64, lambda: f64) -> DMatrix<f64> {
    let d = x.ncols();
    let mut m = x.tr_mul(x) * scale;
    for i in 0..d {
        m[(i, i)] += lambda;
    }
    m
}

/// `log R = log(|V_γ| / |Σ_γ(λ)|)`, the determinant term of the collapsed
/// conditional (doubled). Zero for the empty model.
pub fn log_det_ratio(x_active: &DMatrix<f64>, tau: f64, lambda: f64) -> Result<f64> {
    let d = x_active.ncols();
    if d == 0 {
        return Ok(0.0);
    }
    let gram = x_active.tr_mul(x_active);
    let mut a = Vec::new();
    let mut b = Vec::new();
    prior_and_posterior_log_dets(gram.as_slice(), d, tau, lambda, &mut a, &mut b)
        .map(|(la, lb)| la - lb)
}

/// Factorizes `A = G/τ + λI` and `B = G(1+τ)/τ + λI` into `a_buf`/`b_buf`
/// and returns `(log|A|, log|B|)`. `gram` is column-major `d x d`.
pub(crate) fn prior_and_posterior_log_dets(
    gram: &[f64],
    d: usize,
    tau: f64,
    lambda: f64,
    a_buf: &mut Vec<f64>,
    b_buf: &mut Vec<f64>,
) -> Result<(f64, f64)> {
    let prior_scale = 1.0 / tau;
    let post_scale = (1.0 + tau) / tau;
    a_buf.clear();
    b_buf.clear();
    a_buf.extend(gram.iter().map(|g| g * prior_scale));
    b_buf.extend(gram.iter().map(|g| g * post_scale));
    for i in 0..d {
        a_buf[i * d + i] += lambda;
        b_buf[i * d + i] += lambda;
    }
    let la = cholesky_in_place(a_buf, d)?;
    let lb = cholesky_in_place(b_buf, d)?;
    Ok((la, lb))
}

/// Copies `G[idx, idx]` into a column-major buffer.
pub(crate) fn gram_submatrix(gram: &DMatrix<f64>, idx: &[usize], out: &mut Vec<f64>) {
    out.clear();
    for &c in idx {
        let col = gram.column(c);
        out.extend(idx.iter().map(|&r| col[r]));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::spd_factorize;
    use approx::assert_relative_eq;

    #[test]
    fn default_lambda_cases() {
        assert_eq!(default_lambda(300, 0.0), 1.0 / 300.0);
        assert_eq!(default_lambda(275, 0.0), 1.0 / 275.0);
        assert_eq!(default_lambda(100_000_000, 1e-6), 1e-6);
    }

    #[test]
    fn calibrate_direct_evaluation() {
        assert_relative_eq!(
            calibrate_tau(2.0, 6.0, 2, 0.5).unwrap(),
            3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn calibrate_limit_of_huge_trace() {
        let t = calibrate_tau(50.0, 1e300, 300, 1.0 / 300.0).unwrap();
        assert_relative_eq!(t, 50.0, epsilon = 1e-12);
        assert_eq!(
            calibrate_tau(50.0, f64::INFINITY, 300, 1.0 / 300.0).unwrap(),
            50.0
        );
    }

    #[test]
    fn calibrate_rejects_large_tau0() {
        assert!(matches!(
            calibrate_tau(50.0, 40.0, 10, 0.1),
            Err(Error::Calibration(_))
        ));
        assert!(calibrate_tau(50.0, 50.0, 1, 1.0).is_err());
    }

    #[test]
    fn calibrate_matches_bracketed_form() {
        let (tau0, trace, p) = (50.0, 282_457.0, 300usize);
        let lambda = 1.0 / p as f64;
        let t = calibrate_tau(tau0, trace, p, lambda).unwrap();
        let shift = lambda * p as f64 * tau0;
        assert_relative_eq!(
            t,
            tau0 * (1.0 + shift / (trace - shift)),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            trace / t + lambda * p as f64,
            trace / tau0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn duplicated_columns_still_factorize() {
        let x = DMatrix::from_fn(6, 3, |i, j| {
            let v = (i as f64 + 1.0).sin() * 5.0;
            if j == 1 {
                2.0 * v
            } else if j == 0 {
                v
            } else {
                (i as f64).cos()
            }
        });
        let m = ridge_prior_precision(&x, 50.0, 1.0 / 300.0);
        assert!(spd_factorize(&m).is_ok());
        assert!(spd_factorize(&posterior_coef_precision(&x, 50.0, 1.0 / 300.0)).is_ok());
        // the unridged Gram matrix is singular
        assert!(spd_factorize(&x.tr_mul(&x)).is_err());
    }

    #[test]
    fn zero_design_gives_ridge() {
        let m = ridge_prior_precision(&DMatrix::zeros(4, 2), 3.0, 0.5);
        assert_eq!(m, DMatrix::identity(2, 2) * 0.5);
    }

    #[test]
    fn identity_design_hand_values() {
        let x = DMatrix::identity(2, 2);
        assert_eq!(
            ridge_prior_precision(&x, 1.0, 1.0),
            DMatrix::identity(2, 2) * 2.0
        );
        assert_eq!(
            posterior_coef_precision(&x, 1.0, 1.0),
            DMatrix::identity(2, 2) * 3.0
        );
    }

    #[test]
    fn posterior_precision_large_tau_limit() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.5, -1.0, 3.0, 0.0]);
        let m = posterior_coef_precision(&x, 1e12, 0.1);
        let mut target = x.tr_mul(&x);
        target[(0, 0)] += 0.1;
        target[(1, 1)] += 0.1;
        assert!((m - target).norm() < 1e-9);
    }

    #[test]
    fn empty_model_conventions() {
        let x = DMatrix::zeros(5, 0);
        assert_eq!(posterior_coef_precision(&x, 1.0, 1.0).shape(), (0, 0));
        assert_eq!(log_det_ratio(&x, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn smallest_eigenvalue_at_least_lambda() {
        let x = DMatrix::from_fn(3, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let m = ridge_prior_precision(&x, 10.0, 0.25);
        let eig = m.symmetric_eigen();
        assert!(eig.eigenvalues.min() >= 0.25 - 1e-12);
    }

    #[test]
    fn zero_ridge_recovers_classical_g_prior() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.3, -0.5, 2.0, 1.5, -1.0, 0.2, 0.7]);
        let tau = 7.0;
        let cov = ridge_prior_precision(&x, tau, 0.0).try_inverse().unwrap();
        let classical = x.tr_mul(&x).try_inverse().unwrap() * tau;
        assert!((cov - classical).norm() < 1e-10);
    }
}
