//! Metropolis-within-Gibbs sampler for stochastic search variable selection.
//!
//! One sweep updates `L → U → σ² → γ → β_γ`. The inclusion vector is moved by
//! an inner Metropolis-Hastings loop on the collapsed conditional
//! `f(γ | L, U)`, after which `β_γ` is drawn once from its conditional.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{sample_mvn, spd_factorize, RngStream};
use crate::error::{Error, Result};
use crate::gibbs::{sample_latent, sample_variances, RandomEffects};
use crate::model::{gram_submatrix, Dataset, GammaDensity, GammaVector, ResidualStats, RidgeHyper};
use crate::SCHEMA_VERSION;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsvsConfig {
    pub burn_in: usize,
    pub post_burn_in: usize,
    /// Proposals per Gibbs sweep.
    pub mh_inner_iters: usize,
    /// Number of components of γ flipped per proposal.
    pub flip_count: usize,
    pub init_model_size: usize,
    pub hyper: RidgeHyper,
    pub seed: u64,
    pub stream_id: u64,
}

impl SsvsConfig {
    /// 1000 burn-in and 4000 retained sweeps, 500 single-flip proposals per
    /// sweep, 5 initially active variables.
    pub fn new(hyper: RidgeHyper, seed: u64) -> Self {
        Self {
            burn_in: 1000,
            post_burn_in: 4000,
            mh_inner_iters: 500,
            flip_count: 1,
            init_model_size: 5,
            hyper,
            seed,
            stream_id: 0,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.flip_count == 0 || self.flip_count > p {
            return Err(Error::Config(format!(
                "flip_count must lie in 1..={p}, got {}",
                self.flip_count
            )));
        }
        if self.mh_inner_iters == 0 {
            return Err(Error::Config("mh_inner_iters must be at least 1".into()));
        }
        if self.init_model_size > p {
            return Err(Error::Config(format!(
                "init_model_size {} exceeds p = {p}",
                self.init_model_size
            )));
        }
        self.hyper.validate(p)
    }
}

/// Mutable state of one chain.
#[derive(Clone, Debug)]
pub struct SsvsState {
    pub gamma: GammaVector,
    /// Coefficients of the active variables, in increasing index order.
    pub beta_gamma: DVector<f64>,
    pub u: DVector<f64>,
    pub l: DVector<f64>,
    pub sigma2: Vec<f64>,
}

/// Run of consecutive sweeps sharing the same active set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaRun {
    pub active: Vec<u32>,
    pub repeat: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainOutput {
    pub schema_version: u32,
    pub method: String,
    pub variable_names: Vec<String>,
    /// Post-burn-in sweeps during which each variable was active.
    pub selection_counts: Vec<u64>,
    /// Run-length encoded post-burn-in active sets.
    pub gamma_trace: Vec<GammaRun>,
    pub model_size_trace: Vec<u32>,
    pub sigma2_trace: Vec<Vec<f64>>,
    pub u_trace: Vec<Vec<f64>>,
    pub proposals: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub config: SsvsConfig,
}

impl ChainOutput {
    /// Expands the run-length trace into one active set per sweep.
    pub fn expanded_gamma_trace(&self) -> Vec<Vec<u32>> {
        self.gamma_trace
            .iter()
            .flat_map(|run| std::iter::repeat_n(run.active.clone(), run.repeat as usize))
            .collect()
    }
}

/// Proposes `γ*` by flipping `r` distinct, uniformly chosen components.
pub fn propose_gamma(gamma: &GammaVector, r: usize, rng: &mut RngStream) -> GammaVector {
    let mut out = gamma.clone();
    if r == 0 || gamma.is_empty() {
        return out;
    }
    for j in rand::seq::index::sample(rng, gamma.len(), r.min(gamma.len())) {
        out.flip(j);
    }
    out
}

/// Runs `iters` propose/accept steps on `γ` against the collapsed target with
/// `L` and `U` held fixed (through `stats`). Returns the final `γ` and the
/// number of accepted proposals.
pub fn mh_gamma_update(
    gamma: &GammaVector,
    density: &mut GammaDensity<'_>,
    stats: &ResidualStats,
    iters: usize,
    flip_count: usize,
    rng: &mut RngStream,
) -> Result<(GammaVector, usize)> {
    let mut current = gamma.clone();
    let mut current_log = density.log_density(&current, stats)?;
    let mut accepted = 0;
    for _ in 0..iters {
        let proposal = propose_gamma(&current, flip_count, rng);
        let proposal_log = if proposal == current {
            current_log
        } else {
            density.log_density(&proposal, stats)?
        };
        if rng.uniform_open01().ln() < proposal_log - current_log {
            current = proposal;
            current_log = proposal_log;
            accepted += 1;
        }
    }
    Ok((current, accepted))
}

/// Draws `β_γ ~ N(V_γ X_γᵀ(L − ZU), V_γ)` with
/// `V_γ⁻¹ = ((1+τ)/τ) X_γᵀX_γ + λI`. The empty model yields an empty vector.
pub fn sample_beta(
    gamma: &GammaVector,
    gram: &DMatrix<f64>,
    stats: &ResidualStats,
    hyper: &RidgeHyper,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    let idx = gamma.active();
    let d = idx.len();
    if d == 0 {
        return Ok(DVector::zeros(0));
    }
    let mut buf = Vec::with_capacity(d * d);
    gram_submatrix(gram, &idx, &mut buf);
    let scale = (1.0 + hyper.tau) / hyper.tau;
    let mut precision = DMatrix::from_vec(d, d, buf) * scale;
    for i in 0..d {
        precision[(i, i)] += hyper.lambda;
    }
    let factor = spd_factorize(&precision)?;
    let w = DVector::from_iterator(d, idx.iter().map(|&j| stats.xtr()[j]));
    let mean = factor.solve(&w)?;
    sample_mvn(&mean, &factor, rng)
}

/// Gibbs machinery for one chain over a fixed dataset.
pub struct SsvsSampler<'a> {
    data: &'a Dataset,
    hyper: RidgeHyper,
    gram: DMatrix<f64>,
    effects: RandomEffects,
    state: SsvsState,
    rng: RngStream,
}

impl<'a> SsvsSampler<'a> {
    /// Starts from `β_γ = 0`, `U = 0`, `σ² = 1` and `L` drawn from its
    /// conditional at that state.
    pub fn new(
        data: &'a Dataset,
        hyper: RidgeHyper,
        gamma: GammaVector,
        mut rng: RngStream,
    ) -> Result<Self> {
        hyper.validate(data.p())?;
        if gamma.len() != data.p() {
            return Err(Error::DimensionMismatch(format!(
                "initial gamma of length {} for {} variables",
                gamma.len(),
                data.p()
            )));
        }
        let effects = RandomEffects::new(data.z().clone(), data.block_sizes().to_vec())?;
        let l = sample_latent(data.y(), &DVector::zeros(data.n()), &mut rng)?;
        let state = SsvsState {
            beta_gamma: DVector::zeros(gamma.d_gamma()),
            gamma,
            u: DVector::zeros(data.q()),
            l,
            sigma2: vec![1.0; data.block_sizes().len()],
        };
        Ok(Self {
            data,
            hyper,
            gram: data.x().tr_mul(data.x()),
            effects,
            state,
            rng,
        })
    }

    pub fn state(&self) -> &SsvsState {
        &self.state
    }

    /// `X_γ β_γ`.
    fn fixed_predictor(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.data.n());
        for (k, j) in self.state.gamma.active().into_iter().enumerate() {
            out.axpy(self.state.beta_gamma[k], &self.data.x().column(j), 1.0);
        }
        out
    }

    /// One sweep. With `mh = Some((iters, flip_count))` the inclusion vector
    /// is updated; with `None` it stays fixed. Returns accepted proposals.
    pub fn sweep(&mut self, mh: Option<(usize, usize)>) -> Result<usize> {
        let xb = self.fixed_predictor();
        let zu = self.effects.apply(&self.state.u);
        self.state.l = sample_latent(self.data.y(), &(&xb + &zu), &mut self.rng)?;

        self.state.u =
            self.effects
                .sample(&(&self.state.l - &xb), &self.state.sigma2, &mut self.rng)?;
        self.state.sigma2 = sample_variances(
            &self.state.u,
            self.effects.block_sizes(),
            self.hyper.ig_shape,
            self.hyper.ig_scale,
            &mut self.rng,
        )?;

        let resid = &self.state.l - self.effects.apply(&self.state.u);
        let stats = ResidualStats::new(self.data.x(), &resid)?;
        let mut accepted = 0;
        if let Some((iters, flip_count)) = mh {
            let mut density = GammaDensity::new(&self.gram, &self.hyper)?;
            let (gamma, acc) = mh_gamma_update(
                &self.state.gamma,
                &mut density,
                &stats,
                iters,
                flip_count,
                &mut self.rng,
            )?;
            self.state.gamma = gamma;
            accepted = acc;
        }
        self.state.beta_gamma = sample_beta(
            &self.state.gamma,
            &self.gram,
            &stats,
            &self.hyper,
            &mut self.rng,
        )?;
        Ok(accepted)
    }
}

/// Runs `burn_in + post_burn_in` sweeps and summarizes the retained ones.
pub fn run_ssvs_chain(data: &Dataset, config: &SsvsConfig) -> Result<ChainOutput> {
    config.validate(data.p())?;
    let mut rng = RngStream::new(config.seed, config.stream_id);
    let init: Vec<usize> =
        rand::seq::index::sample(&mut rng, data.p(), config.init_model_size).into_vec();
    let gamma = GammaVector::from_active(data.p(), &init)?;
    let mut sampler = SsvsSampler::new(data, config.hyper.clone(), gamma, rng)?;

    let p = data.p();
    let mut counts = vec![0u64; p];
    let mut runs: Vec<GammaRun> = Vec::new();
    let mut sizes = Vec::with_capacity(config.post_burn_in);
    let mut sigma2_trace = Vec::with_capacity(config.post_burn_in);
    let mut u_trace = Vec::with_capacity(config.post_burn_in);
    let mut accepted = 0u64;
    let total = config.burn_in + config.post_burn_in;
    for it in 0..total {
        accepted += sampler
            .sweep(Some((config.mh_inner_iters, config.flip_count)))
            .map_err(|e| e.at_iteration(it))? as u64;
        if it < config.burn_in {
            continue;
        }
        let state = sampler.state();
        let active: Vec<u32> = state.gamma.active().into_iter().map(|j| j as u32).collect();
        for &j in &active {
            counts[j as usize] += 1;
        }
        sizes.push(active.len() as u32);
        match runs.last_mut() {
            Some(run) if run.active == active => run.repeat += 1,
            _ => runs.push(GammaRun { active, repeat: 1 }),
        }
        sigma2_trace.push(state.sigma2.clone());
        u_trace.push(state.u.iter().copied().collect());
    }
    let proposals = (total * config.mh_inner_iters) as u64;
    Ok(ChainOutput {
        schema_version: SCHEMA_VERSION,
        method: "ssvs".into(),
        variable_names: data.variable_names().to_vec(),
        selection_counts: counts,
        gamma_trace: runs,
        model_size_trace: sizes,
        sigma2_trace,
        u_trace,
        proposals,
        accepted,
        acceptance_rate: if proposals == 0 {
            0.0
        } else {
            accepted as f64 / proposals as f64
        },
        config: config.clone(),
    })
}

/// Posterior means from a chain with `γ` held fixed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedModelFit {
    pub active: Vec<usize>,
    pub beta_mean: Vec<f64>,
    pub u_mean: Vec<f64>,
}

/// Runs the sampler without the inclusion update and averages `β_γ` and `U`
/// over the retained sweeps.
pub fn fit_fixed_model(
    data: &Dataset,
    hyper: &RidgeHyper,
    active: &[usize],
    burn_in: usize,
    iterations: usize,
    rng: RngStream,
) -> Result<FixedModelFit> {
    if iterations == 0 {
        return Err(Error::Config(
            "refit needs at least one retained sweep".into(),
        ));
    }
    let gamma = GammaVector::from_active(data.p(), active)?;
    let mut sampler = SsvsSampler::new(data, hyper.clone(), gamma, rng)?;
    let mut beta = DVector::zeros(sampler.state().gamma.d_gamma());
    let mut u = DVector::zeros(data.q());
    for it in 0..burn_in + iterations {
        sampler.sweep(None).map_err(|e| e.at_iteration(it))?;
        if it >= burn_in {
            beta += &sampler.state().beta_gamma;
            u += &sampler.state().u;
        }
    }
    let n = iterations as f64;
    Ok(FixedModelFit {
        active: sampler.state().gamma.active(),
        beta_mean: (beta / n).iter().copied().collect(),
        u_mean: (u / n).iter().copied().collect(),
    })
}
