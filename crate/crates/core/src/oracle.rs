//! Slow reference computations for the collapsed inclusion conditional:
//! direct quadrature over the coefficients and exhaustive enumeration of
//! small model spaces.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{log_integrated_gamma_density, Dataset, GammaVector, RidgeHyper};

/// Points per dimension of the composite Simpson rule.
pub const QUADRATURE_POINTS: usize = 201;
/// Half-width of the integration box in posterior standard deviations.
pub const QUADRATURE_HALF_WIDTH: f64 = 12.0;
/// Largest model space handled by [`enumerate_gamma_posterior`].
pub const MAX_ENUMERATION_P: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub fast_value: f64,
    pub oracle_value: f64,
    pub abs_error: f64,
    pub active: Vec<usize>,
    pub tau: f64,
    pub lambda: f64,
}

impl OracleReport {
    pub fn new(fast_value: f64, oracle_value: f64, active: Vec<usize>, hyper: &RidgeHyper) -> Self {
        Self {
            fast_value,
            oracle_value,
            abs_error: (fast_value - oracle_value).abs(),
            active,
            tau: hyper.tau,
            lambda: hyper.lambda,
        }
    }
}

fn simpson_weights(m: usize, h: f64) -> Vec<f64> {
    (0..m)
        .map(|k| {
            let w = if k == 0 || k == m - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Log of `∫ f(γ, β_γ | L, U) dβ_γ`, with the normal prior density of `β_γ`
/// written out in full and the residual sum of squares evaluated on the raw
/// `n`-vectors. Differs from [`log_integrated_gamma_density`] only by a
/// constant that does not depend on γ.
pub fn quadrature_gamma_marginal(
    gamma: &GammaVector,
    l: &DVector<f64>,
    zu: &DVector<f64>,
    data: &Dataset,
    hyper: &RidgeHyper,
) -> Result<f64> {
    let d = gamma.d_gamma();
    if d > 2 {
        return Err(Error::Unsupported(format!(
            "quadrature oracle handles at most 2 active variables, got {d}"
        )));
    }
    if gamma.len() != data.p() || l.len() != data.n() || zu.len() != data.n() {
        return Err(Error::DimensionMismatch(
            "gamma, latent vector or ZU inconsistent with the dataset".into(),
        ));
    }
    let log_prior: f64 = gamma
        .bits()
        .iter()
        .zip(&hyper.pi)
        .map(|(&b, &q)| if b { q.ln() } else { (1.0 - q).ln() })
        .sum();
    let r = l - zu;
    if d == 0 {
        return Ok(-0.5 * r.norm_squared() + log_prior);
    }
    let x = data.x().select_columns(&gamma.active());
    let (tau, lambda) = (hyper.tau, hyper.lambda);

    // prior precision A = G/τ + λI and posterior precision B = A + G, by hand
    let g = |i: usize, j: usize| x.column(i).dot(&x.column(j));
    let a = |i: usize, j: usize| g(i, j) / tau + if i == j { lambda } else { 0.0 };
    let b = |i: usize, j: usize| a(i, j) + g(i, j);
    let w: Vec<f64> = (0..d).map(|j| x.column(j).dot(&r)).collect();

    let (log_det_a, mode, whiten, log_det_b) = if d == 1 {
        let b11 = b(0, 0);
        (
            a(0, 0).ln(),
            vec![w[0] / b11],
            [[1.0 / b11.sqrt(), 0.0], [0.0, 0.0]],
            b11.ln(),
        )
    } else {
        let (b11, b12, b22) = (b(0, 0), b(0, 1), b(1, 1));
        let det_b = b11 * b22 - b12 * b12;
        let det_a = a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1);
        let mode = vec![
            (b22 * w[0] - b12 * w[1]) / det_b,
            (b11 * w[1] - b12 * w[0]) / det_b,
        ];
        // B = C Cᵀ with C lower triangular; β = mode + C⁻ᵀ z
        let c11 = b11.sqrt();
        let c21 = b12 / c11;
        let c22 = (b22 - c21 * c21).sqrt();
        let whiten = [[1.0 / c11, -c21 / (c11 * c22)], [0.0, 1.0 / c22]];
        (det_a.ln(), mode, whiten, det_b.ln())
    };

    let log_joint = |beta: &[f64]| -> f64 {
        let mut resid = r.clone();
        for (j, &bj) in beta.iter().enumerate() {
            resid.axpy(-bj, &x.column(j), 1.0);
        }
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += beta[i] * a(i, j) * beta[j];
            }
        }
        -0.5 * resid.norm_squared() - 0.5 * quad + 0.5 * log_det_a
            - 0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln()
    };

    let m = QUADRATURE_POINTS;
    let h = 2.0 * QUADRATURE_HALF_WIDTH / (m - 1) as f64;
    let nodes: Vec<f64> = (0..m)
        .map(|k| -QUADRATURE_HALF_WIDTH + k as f64 * h)
        .collect();
    let weights = simpson_weights(m, h);
    let center = log_joint(&mode);

    let mut terms = Vec::with_capacity(if d == 1 { m } else { m * m });
    if d == 1 {
        for k in 0..m {
            let beta = [mode[0] + whiten[0][0] * nodes[k]];
            terms.push(weights[k].ln() + log_joint(&beta) - center);
        }
    } else {
        for k1 in 0..m {
            for k2 in 0..m {
                let (z1, z2) = (nodes[k1], nodes[k2]);
                let beta = [
                    mode[0] + whiten[0][0] * z1 + whiten[0][1] * z2,
                    mode[1] + whiten[1][1] * z2,
                ];
                terms.push(weights[k1].ln() + weights[k2].ln() + log_joint(&beta) - center);
            }
        }
    }
    // Jacobian of β ↦ z is |B|^{1/2}
    Ok(center + log_sum_exp(terms.into_iter()) - 0.5 * log_det_b + log_prior)
}

/// Normalized `f(γ | L, U)` over all `2^p` inclusion vectors, indexed by
/// [`GammaVector::code`].
pub fn enumerate_gamma_posterior(
    data: &Dataset,
    hyper: &RidgeHyper,
    l: &DVector<f64>,
    zu: &DVector<f64>,
) -> Result<Vec<f64>> {
    let p = data.p();
    if p > MAX_ENUMERATION_P {
        return Err(Error::Unsupported(format!(
            "enumeration limited to {MAX_ENUMERATION_P} variables, got {p}"
        )));
    }
    let logs = (0..1u64 << p)
        .map(|code| {
            log_integrated_gamma_density(&GammaVector::from_code(p, code), l, zu, data, hyper)
        })
        .collect::<Result<Vec<f64>>>()?;
    let norm = log_sum_exp(logs.iter().copied());
    Ok(logs.iter().map(|v| (v - norm).exp()).collect())
}

/// Total variation distance between two distributions on the same support.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Convenience for tests: a dataset with a single-level random effect.
pub fn dataset_without_grouping(x: DMatrix<f64>) -> Result<Dataset> {
    let n = x.nrows();
    let p = x.ncols();
    let y = (0..n).map(|i| i % 2 == 0).collect();
    Dataset::with_levels(x, &vec![0; n], 1, y, crate::simdata::variable_names(p))
}
