//! Bayesian Lasso for the probit mixed model, used as a comparison baseline.
//!
//! Hierarchy: `β_j | λ_j ~ N(0, λ_j)`, `λ_j ~ Exp(δ/2)`, `δ ~ Gamma(e, f)`
//! (scale `f`), so that marginally `β_j ~ Laplace(0, 1/√δ)`. The latent
//! liabilities, random effects and their variances use the same conditionals
//! as the SSVS sampler.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{
    sample_gamma, sample_inverse_gaussian, sample_mvn, spd_factorize, standard_normal, RngStream,
};
use crate::error::{Error, Result};
use crate::gibbs::{sample_latent, sample_variances, RandomEffects};
use crate::model::Dataset;
use crate::SCHEMA_VERSION;

/// Lower bound on `|β_j|` when forming the inverse-Gaussian mean `√δ/|β_j|`.
pub const BETA_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoHyper {
    /// Shape of the gamma hyper-prior on δ.
    pub e: f64,
    /// Scale of the gamma hyper-prior on δ.
    pub f: f64,
    pub ig_shape: f64,
    pub ig_scale: f64,
}

impl Default for LassoHyper {
    fn default() -> Self {
        Self {
            e: 1.0,
            f: 1.0,
            ig_shape: 1.0,
            ig_scale: 1.0,
        }
    }
}

impl LassoHyper {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("e", self.e),
            ("f", self.f),
            ("ig_shape", self.ig_shape),
            ("ig_scale", self.ig_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub burn_in: usize,
    pub post_burn_in: usize,
    pub hyper: LassoHyper,
    /// Level of the equal-tailed credible intervals reported for each β_j.
    pub ci_level: f64,
    pub seed: u64,
    pub stream_id: u64,
}

impl LassoConfig {
    /// 5000 burn-in and 15000 retained sweeps, `e = f = 1`, 95% intervals.
    pub fn new(seed: u64) -> Self {
        Self {
            burn_in: 5000,
            post_burn_in: 15000,
            hyper: LassoHyper::default(),
            ci_level: 0.95,
            seed,
            stream_id: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Config(format!(
                "ci_level must lie in (0, 1), got {}",
                self.ci_level
            )));
        }
        if self.post_burn_in == 0 {
            return Err(Error::Config("post_burn_in must be at least 1".into()));
        }
        self.hyper.validate()
    }
}

#[derive(Clone, Debug)]
pub struct LassoState {
    pub beta: DVector<f64>,
    /// Prior variances `λ_j` of the coefficients.
    pub lambda: Vec<f64>,
    pub delta: f64,
    pub u: DVector<f64>,
    pub l: DVector<f64>,
    pub sigma2: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LassoOutput {
    pub schema_version: u32,
    pub method: String,
    pub variable_names: Vec<String>,
    pub beta_mean: Vec<f64>,
    pub lambda_mean: Vec<f64>,
    pub ci_level: f64,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub delta_mean: f64,
    pub delta_trace: Vec<f64>,
    pub sigma2_trace: Vec<Vec<f64>>,
    pub config: LassoConfig,
}

/// How the β conditional is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaRoute {
    /// Factorize the `p x p` precision `XᵀX + Λ⁻¹`.
    Precision,
    /// Solve an `n x n` system with `XΛXᵀ + I` (exact; cheaper when `p > n`).
    Dual,
}

/// Fixed-effect design prepared for repeated β draws.
#[derive(Clone, Debug)]
pub struct LassoDesign {
    x: DMatrix<f64>,
    gram: Option<DMatrix<f64>>,
    route: BetaRoute,
}

impl LassoDesign {
    /// Picks the cheaper route for the shape of `x`.
    pub fn new(x: DMatrix<f64>) -> Self {
        let route = if x.ncols() <= x.nrows() {
            BetaRoute::Precision
        } else {
            BetaRoute::Dual
        };
        Self::with_route(x, route)
    }

    pub fn with_route(x: DMatrix<f64>, route: BetaRoute) -> Self {
        let gram = (route == BetaRoute::Precision).then(|| x.tr_mul(&x));
        Self { x, gram, route }
    }

    pub fn route(&self) -> BetaRoute {
        self.route
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }
}

/// Draws `β ~ N_p(V_Λ Xᵀ r, V_Λ)` with `V_Λ = (XᵀX + Λ⁻¹)⁻¹` and `r = L − ZU`.
pub fn sample_beta_lasso(
    design: &LassoDesign,
    resid: &DVector<f64>,
    lambda: &[f64],
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    let (n, p) = design.x.shape();
    if resid.len() != n || lambda.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "residual of length {} and {} prior variances for a {n}x{p} design",
            resid.len(),
            lambda.len()
        )));
    }
    if let Some(bad) = lambda.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "prior variances must be positive and finite, got {bad}"
        )));
    }
    match design.route {
        BetaRoute::Precision => {
            let mut precision = design
                .gram
                .clone()
                .expect("gram present for precision route");
            for (j, &lj) in lambda.iter().enumerate() {
                precision[(j, j)] += 1.0 / lj;
            }
            let factor = spd_factorize(&precision)?;
            let mean = factor.solve(&design.x.tr_mul(resid))?;
            sample_mvn(&mean, &factor, rng)
        }
        BetaRoute::Dual => {
            // Bhattacharya, Chakraborty and Mallick (2016): with u ~ N(0, Λ)
            // and e ~ N(0, I_n), u + ΛXᵀ(XΛXᵀ + I)⁻¹(r − Xu − e) has the
            // target distribution.
            let sd: Vec<f64> = lambda.iter().map(|v| v.sqrt()).collect();
            let u = DVector::from_fn(p, |j, _| sd[j] * standard_normal(rng));
            let mut scaled = design.x.clone();
            for (j, mut col) in scaled.column_iter_mut().enumerate() {
                col *= sd[j];
            }
            let mut m = &scaled * scaled.transpose();
            for i in 0..n {
                m[(i, i)] += 1.0;
            }
            let noise = DVector::from_fn(n, |_, _| standard_normal(rng));
            let rhs = resid - &design.x * &u - noise;
            let w = spd_factorize(&m)?.solve(&rhs)?;
            let mut beta = design.x.tr_mul(&w);
            for j in 0..p {
                beta[j] = u[j] + lambda[j] * beta[j];
            }
            Ok(beta)
        }
    }
}

/// Draws `1/λ_j ~ IGauss(√δ/|β_j|, δ)` and returns the `λ_j`.
pub fn sample_lambda_inverse(
    beta: &DVector<f64>,
    delta: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lasso parameter must be positive, got {delta}"
        )));
    }
    let root = delta.sqrt();
    beta.iter()
        .map(|&b| {
            let mu = root / b.abs().max(BETA_FLOOR);
            let inv = sample_inverse_gaussian(mu, delta, rng)?;
            Ok((1.0 / inv).clamp(f64::MIN_POSITIVE, f64::MAX))
        })
        .collect()
}

/// Draws `δ ~ Gamma(p + e, (Σλ_j/2 + 1/f)⁻¹)` (scale parameterization).
pub fn sample_delta(lambda: &[f64], e: f64, f: f64, rng: &mut RngStream) -> Result<f64> {
    if let Some(bad) = lambda.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "prior variances must be positive, got {bad}"
        )));
    }
    let shape = lambda.len() as f64 + e;
    let rate = lambda.iter().sum::<f64>() / 2.0 + 1.0 / f;
    sample_gamma(shape, 1.0 / rate, rng)
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Runs the Gibbs sampler with sweep order `L → U → σ² → β → λ → δ`.
pub fn run_lasso_chain(data: &Dataset, config: &LassoConfig) -> Result<LassoOutput> {
    config.validate()?;
    let (n, p) = (data.n(), data.p());
    let hyper = &config.hyper;
    let mut rng = RngStream::new(config.seed, config.stream_id);
    let design = LassoDesign::new(data.x().clone());
    let effects = RandomEffects::new(data.z().clone(), data.block_sizes().to_vec())?;

    let mut state = LassoState {
        beta: DVector::zeros(p),
        lambda: vec![1.0; p],
        delta: 1.0,
        u: DVector::zeros(data.q()),
        l: sample_latent(data.y(), &DVector::zeros(n), &mut rng)?,
        sigma2: vec![1.0; data.block_sizes().len()],
    };

    let keep = config.post_burn_in;
    let mut beta_draws: Vec<Vec<f64>> = vec![Vec::with_capacity(keep); p];
    let mut lambda_sum = vec![0.0; p];
    let mut delta_trace = Vec::with_capacity(keep);
    let mut sigma2_trace = Vec::with_capacity(keep);

    for it in 0..config.burn_in + keep {
        let step = |state: &mut LassoState, rng: &mut RngStream| -> Result<()> {
            let xb = design.x() * &state.beta;
            let zu = effects.apply(&state.u);
            state.l = sample_latent(data.y(), &(&xb + &zu), rng)?;
            state.u = effects.sample(&(&state.l - &xb), &state.sigma2, rng)?;
            state.sigma2 = sample_variances(
                &state.u,
                effects.block_sizes(),
                hyper.ig_shape,
                hyper.ig_scale,
                rng,
            )?;
            let resid = &state.l - effects.apply(&state.u);
            state.beta = sample_beta_lasso(&design, &resid, &state.lambda, rng)?;
            state.lambda = sample_lambda_inverse(&state.beta, state.delta, rng)?;
            state.delta = sample_delta(&state.lambda, hyper.e, hyper.f, rng)?;
            Ok(())
        };
        step(&mut state, &mut rng).map_err(|e| e.at_iteration(it))?;
        if it >= config.burn_in {
            for j in 0..p {
                beta_draws[j].push(state.beta[j]);
                lambda_sum[j] += state.lambda[j];
            }
            delta_trace.push(state.delta);
            sigma2_trace.push(state.sigma2.clone());
        }
    }

    let tail = (1.0 - config.ci_level) / 2.0;
    let mut beta_mean = Vec::with_capacity(p);
    let mut ci_lower = Vec::with_capacity(p);
    let mut ci_upper = Vec::with_capacity(p);
    for draws in &mut beta_draws {
        beta_mean.push(draws.iter().sum::<f64>() / keep as f64);
        draws.sort_by(f64::total_cmp);
        ci_lower.push(quantile_sorted(draws, tail));
        ci_upper.push(quantile_sorted(draws, 1.0 - tail));
    }
    Ok(LassoOutput {
        schema_version: SCHEMA_VERSION,
        method: "lasso".into(),
        variable_names: data.variable_names().to_vec(),
        beta_mean,
        lambda_mean: lambda_sum.iter().map(|s| s / keep as f64).collect(),
        ci_level: config.ci_level,
        ci_lower,
        ci_upper,
        delta_mean: delta_trace.iter().sum::<f64>() / keep as f64,
        delta_trace,
        sigma2_trace,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.0);
        assert_eq!(quantile_sorted(&v, 0.125), 0.5);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
    }

    #[test]
    fn route_follows_shape() {
        assert_eq!(
            LassoDesign::new(DMatrix::zeros(10, 3)).route(),
            BetaRoute::Precision
        );
        assert_eq!(
            LassoDesign::new(DMatrix::zeros(3, 10)).route(),
            BetaRoute::Dual
        );
    }

    #[test]
    fn empty_prior_delta_is_hyper_prior() {
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let m = (0..n)
            .map(|_| sample_delta(&[], 2.0, 1.5, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        // Gamma(2, 1.5) mean 3, sd √4.5
        assert!((m - 3.0).abs() < 3.0 * (4.5_f64 / n as f64).sqrt());
    }

    #[test]
    fn invalid_inputs() {
        let mut rng = RngStream::new(0, 0);
        assert!(sample_lambda_inverse(&DVector::zeros(2), 0.0, &mut rng).is_err());
        assert!(sample_delta(&[1.0, 0.0], 1.0, 1.0, &mut rng).is_err());
        let design = LassoDesign::new(DMatrix::zeros(3, 2));
        assert!(sample_beta_lasso(&design, &DVector::zeros(3), &[1.0], &mut rng).is_err());
        assert!(sample_beta_lasso(&design, &DVector::zeros(3), &[1.0, -1.0], &mut rng).is_err());
        let mut c = LassoConfig::new(0);
        c.ci_level = 1.0;
        assert!(c.validate().is_err());
    }
}
