//! Full conditionals shared by the SSVS and Bayesian Lasso samplers: the
//! latent liabilities `L`, the random effects `U` and their variances `σ²`.

use nalgebra::{DMatrix, DVector};

use crate::distributions::{
    sample_inverse_gamma, sample_mvn, sample_truncated_normal, spd_factorize, RngStream, Truncation,
};
use crate::error::{Error, Result};

/// Redraws every `L_i ~ N(η_i, 1)` truncated to `(0, ∞)` when `Y_i = 1` and to
/// `(−∞, 0)` when `Y_i = 0`, where `η = Xβ + ZU` is the linear predictor.
pub fn sample_latent(
    y: &[bool],
    linear_predictor: &DVector<f64>,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    if y.len() != linear_predictor.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} responses for a predictor of length {}",
            y.len(),
            linear_predictor.len()
        )));
    }
    let mut l = DVector::zeros(y.len());
    for (i, (&yi, &eta)) in y.iter().zip(linear_predictor.iter()).enumerate() {
        let side = if yi {
            Truncation::Left
        } else {
            Truncation::Right
        };
        l[i] = sample_truncated_normal(eta, 1.0, side, rng)?;
    }
    Ok(l)
}

/// Random-effect design with its cross-product precomputed.
#[derive(Clone, Debug)]
pub struct RandomEffects {
    z: DMatrix<f64>,
    ztz: DMatrix<f64>,
    block_sizes: Vec<usize>,
}

impl RandomEffects {
    pub fn new(z: DMatrix<f64>, block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.iter().sum::<usize>() != z.ncols() {
            return Err(Error::DimensionMismatch(
                "block sizes do not partition the columns of Z".into(),
            ));
        }
        let ztz = z.tr_mul(&z);
        Ok(Self {
            z,
            ztz,
            block_sizes,
        })
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn q(&self) -> usize {
        self.z.ncols()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// `ZU`.
    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.z * u
    }

    /// Draws `U ~ N_q(W Zᵀ r, W)` with `W = (ZᵀZ + D⁻¹)⁻¹`, where
    /// `r = L − Xβ` and `D = diag(σ_l² I_{q_l})`.
    pub fn sample(
        &self,
        partial_resid: &DVector<f64>,
        sigma2: &[f64],
        rng: &mut RngStream,
    ) -> Result<DVector<f64>> {
        if sigma2.len() != self.block_sizes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} variances for {} random-effect blocks",
                sigma2.len(),
                self.block_sizes.len()
            )));
        }
        let mut precision = self.ztz.clone();
        let mut offset = 0;
        for (&size, &s2) in self.block_sizes.iter().zip(sigma2) {
            for k in offset..offset + size {
                precision[(k, k)] += 1.0 / s2;
            }
            offset += size;
        }
        let factor = spd_factorize(&precision)?;
        let mean = factor.solve(&self.z.tr_mul(partial_resid))?;
        sample_mvn(&mean, &factor, rng)
    }
}

/// Draws the random-effect design's `U`; see [`RandomEffects::sample`].
pub fn sample_random_effects(
    partial_resid: &DVector<f64>,
    effects: &RandomEffects,
    sigma2: &[f64],
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    effects.sample(partial_resid, sigma2, rng)
}

/// Draws `σ_l² ~ IG(q_l/2 + a, ½‖U_l‖² + b)` for every block.
pub fn sample_variances(
    u: &DVector<f64>,
    block_sizes: &[usize],
    ig_shape: f64,
    ig_scale: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if block_sizes.iter().sum::<usize>() != u.len() {
        return Err(Error::DimensionMismatch(
            "block sizes do not partition U".into(),
        ));
    }
    let mut out = Vec::with_capacity(block_sizes.len());
    let mut offset = 0;
    for &size in block_sizes {
        let ss: f64 = u.rows(offset, size).norm_squared();
        out.push(sample_inverse_gamma(
            size as f64 / 2.0 + ig_shape,
            0.5 * ss + ig_scale,
            rng,
        )?);
        offset += size;
    }
    Ok(out)
}
