//! Final selections, cross-run stability and refit-based prediction.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::blasso::LassoOutput;
use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::model::{Dataset, RidgeHyper};
use crate::ssvs::fit_fixed_model;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Gap,
    FixedThreshold,
    BetaMagnitude,
    LambdaMagnitude,
    CredibleInterval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected variable indices, increasing.
    pub selected: Vec<usize>,
    /// Per-variable statistic the rule was applied to.
    pub counts: Vec<f64>,
    pub threshold_used: f64,
    pub method: SelectionMethod,
}

/// Locates the cut in sorted selection counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRule {
    /// Only the top `window` counts are searched for a gap.
    pub window: usize,
    /// The largest gap must exceed the runner-up by this factor.
    pub dominance: f64,
}

impl Default for GapRule {
    fn default() -> Self {
        Self {
            window: 50,
            dominance: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CountRule {
    Gap(GapRule),
    /// Keep variables selected strictly more often than the threshold.
    Fixed(f64),
}

/// Final selection from per-variable selection counts.
///
/// The gap rule sorts counts in decreasing order, looks at the differences
/// between consecutive entries among the top `window`, and cuts at the
/// largest one when it beats every other difference by the dominance factor.
/// Without such a gap nothing is selected.
pub fn final_selection(counts: &[f64], rule: &CountRule) -> SelectionResult {
    let (threshold, method) = match *rule {
        CountRule::Fixed(t) => (t, SelectionMethod::FixedThreshold),
        CountRule::Gap(gap) => (gap_threshold(counts, &gap), SelectionMethod::Gap),
    };
    SelectionResult {
        selected: (0..counts.len())
            .filter(|&j| counts[j] > threshold)
            .collect(),
        counts: counts.to_vec(),
        threshold_used: threshold,
        method,
    }
}

fn gap_threshold(counts: &[f64], rule: &GapRule) -> f64 {
    let mut sorted = counts.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let no_selection = sorted.first().copied().unwrap_or(0.0);
    let window = rule.window.min(sorted.len());
    if window < 2 {
        return no_selection;
    }
    let gaps: Vec<f64> = sorted[..window].windows(2).map(|w| w[0] - w[1]).collect();
    let (best, &largest) = gaps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("at least one gap");
    let runner_up = gaps
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != best)
        .map(|(_, &g)| g)
        .fold(0.0_f64, f64::max);
    if largest > 0.0 && largest > rule.dominance * runner_up {
        sorted[best + 1]
    } else {
        no_selection
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LassoRule {
    /// `|E[β_j]| > t`.
    BetaMagnitude(f64),
    /// `E[λ_j] > t`.
    LambdaMagnitude(f64),
    /// Equal-tailed interval at the given level excludes zero.
    CredibleInterval(f64),
}

pub fn lasso_select(output: &LassoOutput, rule: &LassoRule) -> Result<SelectionResult> {
    let p = output.beta_mean.len();
    let result = match *rule {
        LassoRule::BetaMagnitude(t) => {
            let stat: Vec<f64> = output.beta_mean.iter().map(|b| b.abs()).collect();
            SelectionResult {
                selected: (0..p).filter(|&j| stat[j] > t).collect(),
                counts: stat,
                threshold_used: t,
                method: SelectionMethod::BetaMagnitude,
            }
        }
        LassoRule::LambdaMagnitude(t) => SelectionResult {
            selected: (0..p).filter(|&j| output.lambda_mean[j] > t).collect(),
            counts: output.lambda_mean.clone(),
            threshold_used: t,
            method: SelectionMethod::LambdaMagnitude,
        },
        LassoRule::CredibleInterval(level) => {
            if !(level > 0.0 && level < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "credible level must lie in (0, 1), got {level}"
                )));
            }
            if (level - output.ci_level).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "chain summarized {} intervals, {level} requested",
                    output.ci_level
                )));
            }
            let excludes: Vec<f64> = (0..p)
                .map(|j| {
                    let (lo, hi) = (output.ci_lower[j], output.ci_upper[j]);
                    if lo > 0.0 || hi < 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            SelectionResult {
                selected: (0..p).filter(|&j| excludes[j] > 0.0).collect(),
                counts: excludes,
                threshold_used: 0.5,
                method: SelectionMethod::CredibleInterval,
            }
        }
    };
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub cw_rel: f64,
    pub run_count: usize,
    pub subsets: Vec<Vec<usize>>,
}

/// Relative weighted consistency of selected subsets over repeated runs
/// (Somol and Novovičová).
///
/// With `F_f` the number of runs selecting feature `f`, `N = Σ F_f` and `n` runs,
/// `CW = Σ_f (F_f/N)(F_f − 1)/(n − 1)` is rescaled between its smallest value
/// (occurrences spread as evenly as possible over the `p` features) and its
/// largest (occurrences packed into as few features as possible) for the same
/// `N`, `n` and `p`. No selections at all score 0.
pub fn cw_rel(subsets: &[Vec<usize>], p: usize) -> Result<f64> {
    let n = subsets.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "stability needs at least 2 runs, got {n}"
        )));
    }
    let mut freq: BTreeMap<usize, u64> = BTreeMap::new();
    for s in subsets {
        let mut seen = s.clone();
        seen.sort_unstable();
        seen.dedup();
        for f in seen {
            if f >= p {
                return Err(Error::InvalidParameter(format!(
                    "feature {f} out of range for p = {p}"
                )));
            }
            *freq.entry(f).or_default() += 1;
        }
    }
    let total: u64 = freq.values().sum();
    if total == 0 {
        return Ok(0.0);
    }
    let (big_n, n_runs, p) = (total as f64, n as u64, p as u64);
    let pairs: f64 = freq.values().map(|&f| (f * (f - 1)) as f64).sum();
    let cw = pairs / (big_n * (n - 1) as f64);

    let d = (total % p) as f64;
    let h = (total % n_runs) as f64;
    let pf = p as f64;
    let nf = n as f64;
    let cw_min = (big_n * big_n - pf * (big_n - d) - d * d) / (pf * big_n * (nf - 1.0));
    let cw_max = (h * h + big_n * (nf - 1.0) - h * nf) / (big_n * (nf - 1.0));
    if cw_max - cw_min <= 1e-15 {
        return Ok(1.0);
    }
    Ok(((cw - cw_min) / (cw_max - cw_min)).clamp(0.0, 1.0))
}

pub fn stability_report(subsets: &[Vec<usize>], p: usize) -> Result<StabilityReport> {
    Ok(StabilityReport {
        cw_rel: cw_rel(subsets, p)?,
        run_count: subsets.len(),
        subsets: subsets.to_vec(),
    })
}

/// Relative tolerance for treating a column as dependent on earlier ones.
const RANK_TOLERANCE: f64 = 1e-8;

/// Greedy left-to-right pass that keeps each column not already in the span
/// of the kept ones. Returns the kept column indices.
pub fn full_rank_submatrix(x_sel: &DMatrix<f64>) -> Vec<usize> {
    let scale = x_sel
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    for (j, col) in x_sel.column_iter().enumerate() {
        let mut v = col.clone_owned();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > RANK_TOLERANCE * scale {
            basis.push(v / norm);
            kept.push(j);
        }
    }
    kept
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefitConfig {
    pub burn_in: usize,
    pub iterations: usize,
    pub hyper: RidgeHyper,
    pub seed: u64,
    pub stream_id: u64,
}

impl RefitConfig {
    pub fn new(hyper: RidgeHyper, seed: u64) -> Self {
        Self {
            burn_in: 500,
            iterations: 2000,
            hyper,
            seed,
            stream_id: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefitResult {
    /// Variables actually refitted after removing linear dependencies.
    pub variables: Vec<usize>,
    pub beta_mean: Vec<f64>,
    pub u_mean: Vec<f64>,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Reduces `selected` to linearly independent training columns, refits the
/// probit mixed model with that inclusion vector fixed, and classifies the
/// validation rows by `Φ(xᵀβ̂ + zᵀÛ) > 0.5`.
pub fn refit_and_predict(
    train: &Dataset,
    selected: &[usize],
    valid: &Dataset,
    config: &RefitConfig,
) -> Result<RefitResult> {
    if valid.p() != train.p() || valid.q() != train.q() {
        return Err(Error::DimensionMismatch(
            "training and validation designs differ in shape".into(),
        ));
    }
    let mut sel = selected.to_vec();
    sel.sort_unstable();
    sel.dedup();
    if let Some(&bad) = sel.iter().find(|&&j| j >= train.p()) {
        return Err(Error::InvalidParameter(format!(
            "variable {bad} out of range"
        )));
    }
    let keep = full_rank_submatrix(&train.x().select_columns(&sel));
    let variables: Vec<usize> = keep.iter().map(|&k| sel[k]).collect();
    if variables.is_empty() {
        return Err(Error::InvalidParameter(
            "no linearly independent variable left to refit".into(),
        ));
    }
    let fit = fit_fixed_model(
        train,
        &config.hyper,
        &variables,
        config.burn_in,
        config.iterations,
        RngStream::new(config.seed, config.stream_id),
    )?;
    let beta = DVector::from_vec(fit.beta_mean.clone());
    let u = DVector::from_vec(fit.u_mean.clone());
    let eta = valid.x().select_columns(&fit.active) * beta + valid.z() * u;
    let (mut tp, mut fn_, mut tn, mut fp) = (0usize, 0usize, 0usize, 0usize);
    for (&yi, &e) in valid.y().iter().zip(eta.iter()) {
        match (yi, e > 0.0) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
        }
    }
    if tp + fn_ == 0 || tn + fp == 0 {
        return Err(Error::Data(
            "validation set needs both positive and negative cases".into(),
        ));
    }
    Ok(RefitResult {
        variables,
        beta_mean: fit.beta_mean,
        u_mean: fit.u_mean,
        sensitivity: tp as f64 / (tp + fn_) as f64,
        specificity: tn as f64 / (tn + fp) as f64,
    })
}
