//! Log density of `γ | L, U` with `β_γ` integrated out:
//!
//! ```text
//! log f(γ | L, U) = ½ (log|V_γ| − log|Σ_γ(λ)|)
//!                 − ½ rᵀ(I − X_γ V_γ X_γᵀ) r
//!                 + Σ_j γ_j log π_j + (1 − γ_j) log(1 − π_j)      (r = L − ZU)
//! ```
//!
//! The quadratic form is `rᵀr − wᵀ V_γ w` with `w = X_γᵀ r`, so only
//! `d_γ x d_γ` systems are ever factorized.

use nalgebra::{DMatrix, DVector};

use super::prior::{gram_submatrix, prior_and_posterior_log_dets};
use super::{Dataset, GammaVector, RidgeHyper};
use crate::distributions::forward_substitute;
use crate::error::{Error, Result};

/// `Xᵀr` and `rᵀr` for the working residual `r = L − ZU`.
#[derive(Clone, Debug)]
pub struct ResidualStats {
    xtr: DVector<f64>,
    rss: f64,
}

impl ResidualStats {
    pub fn new(x: &DMatrix<f64>, resid: &DVector<f64>) -> Result<Self> {
        if x.nrows() != resid.len() {
            return Err(Error::DimensionMismatch(format!(
                "residual of length {} for a design with {} rows",
                resid.len(),
                x.nrows()
            )));
        }
        Ok(Self {
            xtr: x.tr_mul(resid),
            rss: resid.norm_squared(),
        })
    }

    pub fn xtr(&self) -> &DVector<f64> {
        &self.xtr
    }

    pub fn rss(&self) -> f64 {
        self.rss
    }
}

/// Evaluator of the collapsed conditional that reuses its scratch buffers
/// across calls. Holds the full Gram matrix `XᵀX`.
pub struct GammaDensity<'a> {
    gram: &'a DMatrix<f64>,
    tau: f64,
    lambda: f64,
    log_odds: Vec<f64>,
    log_null: f64,
    idx: Vec<usize>,
    g_buf: Vec<f64>,
    a_buf: Vec<f64>,
    b_buf: Vec<f64>,
    w_buf: Vec<f64>,
}

impl<'a> GammaDensity<'a> {
    pub fn new(gram: &'a DMatrix<f64>, hyper: &RidgeHyper) -> Result<Self> {
        let p = gram.nrows();
        if gram.ncols() != p || hyper.pi.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "Gram matrix {}x{} with {} inclusion probabilities",
                gram.nrows(),
                gram.ncols(),
                hyper.pi.len()
            )));
        }
        let log_null = hyper.pi.iter().map(|&q| (1.0 - q).ln()).sum();
        let log_odds = hyper.pi.iter().map(|&q| q.ln() - (1.0 - q).ln()).collect();
        Ok(Self {
            gram,
            tau: hyper.tau,
            lambda: hyper.lambda,
            log_odds,
            log_null,
            idx: Vec::new(),
            g_buf: Vec::new(),
            a_buf: Vec::new(),
            b_buf: Vec::new(),
            w_buf: Vec::new(),
        })
    }

    /// `Σ_j γ_j log π_j + (1 − γ_j) log(1 − π_j)`.
    pub fn log_prior(&self, gamma: &GammaVector) -> f64 {
        self.log_null
            + gamma
                .bits()
                .iter()
                .zip(&self.log_odds)
                .filter(|(&b, _)| b)
                .map(|(_, lo)| lo)
                .sum::<f64>()
    }

    pub fn log_density(&mut self, gamma: &GammaVector, stats: &ResidualStats) -> Result<f64> {
        if gamma.len() != self.gram.nrows() || stats.xtr.len() != self.gram.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "gamma of length {} against {} variables",
                gamma.len(),
                self.gram.nrows()
            )));
        }
        gamma.active_into(&mut self.idx);
        gram_submatrix(self.gram, &self.idx, &mut self.g_buf);
        self.w_buf.clear();
        self.w_buf.extend(self.idx.iter().map(|&j| stats.xtr[j]));
        let like = collapsed_likelihood(
            &self.g_buf,
            &mut self.w_buf,
            stats.rss,
            self.tau,
            self.lambda,
            &mut self.a_buf,
            &mut self.b_buf,
        )?;
        Ok(like + self.log_prior(gamma))
    }
}

/// Likelihood part of the collapsed density. `w` is overwritten.
fn collapsed_likelihood(
    gram: &[f64],
    w: &mut [f64],
    rss: f64,
    tau: f64,
    lambda: f64,
    a_buf: &mut Vec<f64>,
    b_buf: &mut Vec<f64>,
) -> Result<f64> {
    let d = w.len();
    if d == 0 {
        return Ok(-0.5 * rss);
    }
    let (log_det_prior_prec, log_det_post_prec) =
        prior_and_posterior_log_dets(gram, d, tau, lambda, a_buf, b_buf)?;
    // wᵀ V_γ w = ‖L_B⁻¹ w‖² with V_γ⁻¹ = L_B L_Bᵀ
    forward_substitute(b_buf, d, w);
    let explained: f64 = w.iter().map(|v| v * v).sum();
    // |V_γ| = 1/|V_γ⁻¹| and |Σ_γ(λ)| = 1/|Σ_γ(λ)⁻¹|
    Ok(0.5 * (log_det_prior_prec - log_det_post_prec) - 0.5 * (rss - explained))
}

/// Log of the collapsed conditional `f(γ | L, U)` up to a γ-independent
/// constant. `zu` is the random-effect contribution `ZU`.
pub fn log_integrated_gamma_density(
    gamma: &GammaVector,
    l: &DVector<f64>,
    zu: &DVector<f64>,
    data: &Dataset,
    hyper: &RidgeHyper,
) -> Result<f64> {
    if gamma.len() != data.p() || hyper.pi.len() != data.p() {
        return Err(Error::DimensionMismatch(format!(
            "gamma of length {} for {} variables",
            gamma.len(),
            data.p()
        )));
    }
    if l.len() != data.n() || zu.len() != data.n() {
        return Err(Error::DimensionMismatch(
            "latent vector or ZU does not match the number of rows".into(),
        ));
    }
    let resid = l - zu;
    let x_active = data.x().select_columns(&gamma.active());
    let gram = x_active.tr_mul(&x_active);
    let mut w: Vec<f64> = x_active.tr_mul(&resid).iter().copied().collect();
    let like = collapsed_likelihood(
        gram.as_slice(),
        &mut w,
        resid.norm_squared(),
        hyper.tau,
        hyper.lambda,
        &mut Vec::new(),
        &mut Vec::new(),
    )?;
    let prior: f64 = gamma
        .bits()
        .iter()
        .zip(&hyper.pi)
        .map(|(&b, &q)| if b { q.ln() } else { (1.0 - q).ln() })
        .sum();
    Ok(like + prior)
}

/// `log f(γ_new | L, U) − log f(γ_old | L, U)`; accept with probability
/// `min{1, exp(·)}` under a symmetric proposal.
pub fn log_acceptance_ratio(
    gamma_old: &GammaVector,
    gamma_new: &GammaVector,
    l: &DVector<f64>,
    zu: &DVector<f64>,
    data: &Dataset,
    hyper: &RidgeHyper,
) -> Result<f64> {
    if gamma_old == gamma_new {
        return Ok(0.0);
    }
    Ok(log_integrated_gamma_density(gamma_new, l, zu, data, hyper)?
        - log_integrated_gamma_density(gamma_old, l, zu, data, hyper)?)
}
