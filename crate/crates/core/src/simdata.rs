//! Seeded synthetic datasets with engineered linear dependencies among the
//! candidate variables.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{standard_normal, RngStream};
use crate::error::{Error, Result};
use crate::model::{trace_xtx, Dataset};

/// A constructed column, as an exact arithmetic function of base columns
/// (0-based indices).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CollinearRule {
    /// `x_target = factor · x_source`
    Scaled {
        target: usize,
        source: usize,
        factor: f64,
    },
    /// `x_target = x_a + sign · x_b`
    Combination {
        target: usize,
        a: usize,
        b: usize,
        sign: f64,
    },
}

impl CollinearRule {
    pub fn target(&self) -> usize {
        match *self {
            Self::Scaled { target, .. } | Self::Combination { target, .. } => target,
        }
    }

    pub fn sources(&self) -> Vec<usize> {
        match *self {
            Self::Scaled { source, .. } => vec![source],
            Self::Combination { a, b, .. } => vec![a, b],
        }
    }

    fn column(&self, base: &DMatrix<f64>, i: usize) -> f64 {
        match *self {
            Self::Scaled { source, factor, .. } => factor * base[(i, source)],
            Self::Combination { a, b, sign, .. } => base[(i, a)] + sign * base[(i, b)],
        }
    }
}

/// Simulation design: uniform base columns, derived columns, one balanced
/// random effect and a probit link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n_train: usize,
    pub n_valid: usize,
    pub p_base: usize,
    /// Base columns are drawn from `Uniform[−half_width, half_width]`.
    pub half_width: f64,
    pub collinear_map: Vec<CollinearRule>,
    /// `(variable, coefficient)` pairs of the generating model.
    pub true_beta: Vec<(usize, f64)>,
    pub true_u: Vec<f64>,
    pub obs_per_level: usize,
    pub seed: u64,
}

impl SimSpec {
    /// 280 base variables on [−5, 5]; V281–V290 = 2 × V1–V10, V291 = V1 + V2,
    /// V292 = V3 − V4, V293–V300 = V5–V12 + V13–V20; the first five variables
    /// generate the response with β = (1, −1, 2, −2, 3) and U = (−3, −2, 2, 3),
    /// 25 rows per level in each of the 100-row training and validation
    /// splits.
    pub fn standard_design(seed: u64) -> Self {
        let mut rules: Vec<CollinearRule> = (0..10)
            .map(|k| CollinearRule::Scaled {
                target: 280 + k,
                source: k,
                factor: 2.0,
            })
            .collect();
        rules.push(CollinearRule::Combination {
            target: 290,
            a: 0,
            b: 1,
            sign: 1.0,
        });
        rules.push(CollinearRule::Combination {
            target: 291,
            a: 2,
            b: 3,
            sign: -1.0,
        });
        rules.extend((0..8).map(|k| CollinearRule::Combination {
            target: 292 + k,
            a: 4 + k,
            b: 12 + k,
            sign: 1.0,
        }));
        Self {
            n_train: 100,
            n_valid: 100,
            p_base: 280,
            half_width: 5.0,
            collinear_map: rules,
            true_beta: vec![(0, 1.0), (1, -1.0), (2, 2.0), (3, -2.0), (4, 3.0)],
            true_u: vec![-3.0, -2.0, 2.0, 3.0],
            obs_per_level: 25,
            seed,
        }
    }

    pub fn p(&self) -> usize {
        self.p_base + self.collinear_map.len()
    }

    pub fn validate(&self) -> Result<()> {
        let levels = self.true_u.len();
        if levels == 0 {
            return Err(Error::Config("at least one random-effect level".into()));
        }
        for (name, n) in [("n_train", self.n_train), ("n_valid", self.n_valid)] {
            if n != self.obs_per_level * levels {
                return Err(Error::Config(format!(
                    "{name} = {n} is not obs_per_level ({}) x levels ({levels})",
                    self.obs_per_level
                )));
            }
        }
        let mut targets: Vec<usize> = self.collinear_map.iter().map(|r| r.target()).collect();
        targets.sort_unstable();
        let expected: Vec<usize> = (self.p_base..self.p()).collect();
        if targets != expected {
            return Err(Error::Config(
                "constructed columns must fill the indices after the base columns".into(),
            ));
        }
        if self
            .collinear_map
            .iter()
            .flat_map(|r| r.sources())
            .any(|s| s >= self.p_base)
        {
            return Err(Error::Config(
                "constructed columns may only use base columns as sources".into(),
            ));
        }
        if self.true_beta.iter().any(|&(j, _)| j >= self.p()) {
            return Err(Error::Config("generating variable out of range".into()));
        }
        if !(self.half_width > 0.0) {
            return Err(Error::Config("half_width must be positive".into()));
        }
        Ok(())
    }
}

/// Ground truth written alongside a simulated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub seed: u64,
    pub generating: Vec<usize>,
    pub true_beta: Vec<f64>,
    pub true_u: Vec<f64>,
    /// Generating variables plus constructed columns built only from them.
    pub relevant: Vec<usize>,
    pub collinear_map: Vec<CollinearRule>,
    pub train_trace_xtx: f64,
    pub train_class_balance: f64,
    pub valid_class_balance: f64,
}

/// `V1..Vp`.
pub fn variable_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("V{j}")).collect()
}

fn relevant_set(generating: &[usize], rules: &[CollinearRule]) -> Vec<usize> {
    let mut out = generating.to_vec();
    out.extend(
        rules
            .iter()
            .filter(|r| r.sources().iter().all(|s| generating.contains(s)))
            .map(|r| r.target()),
    );
    out.sort_unstable();
    out
}

fn append_constructed(base: &DMatrix<f64>, rules: &[CollinearRule], p: usize) -> DMatrix<f64> {
    let (n, p_base) = base.shape();
    let mut x = DMatrix::zeros(n, p);
    x.columns_mut(0, p_base).copy_from(base);
    for rule in rules {
        for i in 0..n {
            x[(i, rule.target())] = rule.column(base, i);
        }
    }
    x
}

fn contiguous_levels(n: usize, levels: usize) -> Vec<usize> {
    // as even as possible, earlier levels take the remainder
    let base = n / levels;
    let extra = n % levels;
    (0..levels)
        .flat_map(|l| std::iter::repeat_n(l, base + usize::from(l < extra)))
        .collect()
}

fn probit_split(
    x: DMatrix<f64>,
    levels: &[usize],
    beta: &DVector<f64>,
    u: &[f64],
    rng: &mut RngStream,
) -> Result<Dataset> {
    let n = x.nrows();
    let eta = &x * beta;
    let y: Vec<bool> = (0..n)
        .map(|i| eta[i] + u[levels[i]] + standard_normal(rng) > 0.0)
        .collect();
    let p = x.ncols();
    Dataset::with_levels(x, levels, u.len(), y, variable_names(p))
}

/// Generates training and validation splits. The first `n_train` simulated
/// rows form the training set.
pub fn generate_simulated(spec: &SimSpec) -> Result<(Dataset, Dataset, SimTruth)> {
    spec.validate()?;
    let mut rng = RngStream::new(spec.seed, 0);
    let n = spec.n_train + spec.n_valid;
    let p = spec.p();
    let w = spec.half_width;
    let mut base = DMatrix::zeros(n, spec.p_base);
    for i in 0..n {
        for j in 0..spec.p_base {
            base[(i, j)] = -w + 2.0 * w * rng.uniform_open01();
        }
    }
    let x = append_constructed(&base, &spec.collinear_map, p);
    let mut beta = DVector::zeros(p);
    for &(j, b) in &spec.true_beta {
        beta[j] = b;
    }
    let levels = spec.true_u.len();
    let train = probit_split(
        x.rows(0, spec.n_train).into_owned(),
        &contiguous_levels(spec.n_train, levels),
        &beta,
        &spec.true_u,
        &mut rng,
    )?;
    let valid = probit_split(
        x.rows(spec.n_train, spec.n_valid).into_owned(),
        &contiguous_levels(spec.n_valid, levels),
        &beta,
        &spec.true_u,
        &mut rng,
    )?;
    let generating: Vec<usize> = spec.true_beta.iter().map(|&(j, _)| j).collect();
    let truth = SimTruth {
        seed: spec.seed,
        relevant: relevant_set(&generating, &spec.collinear_map),
        generating,
        true_beta: spec.true_beta.iter().map(|&(_, b)| b).collect(),
        true_u: spec.true_u.clone(),
        collinear_map: spec.collinear_map.clone(),
        train_trace_xtx: trace_xtx(train.x()),
        train_class_balance: train.class_balance(),
        valid_class_balance: valid.class_balance(),
    };
    Ok((train, valid, truth))
}

/// Expression-like design with hospital effects and three dependent columns
/// appended to 275 correlated Gaussian ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalogSpec {
    pub n_train: usize,
    pub n_valid: usize,
    pub p_base: usize,
    /// Columns are correlated within consecutive blocks of this size.
    pub block: usize,
    pub within_block_correlation: f64,
    pub column_sd: f64,
    pub signal: Vec<(usize, f64)>,
    pub true_u: Vec<f64>,
    pub collinear_map: Vec<CollinearRule>,
    pub seed: u64,
}

impl AnalogSpec {
    /// Signal variables V148, V260, V263, V273 with coefficients
    /// (1, −1, 1, 1); V276 = 2 × V148, V277 = −V260, V278 = V263 + V273;
    /// three hospitals; 100 training and 88 validation rows.
    pub fn default_with_seed(seed: u64) -> Self {
        Self {
            n_train: 100,
            n_valid: 88,
            p_base: 275,
            block: 25,
            within_block_correlation: 0.3,
            column_sd: 2.0,
            signal: vec![(147, 1.0), (259, -1.0), (262, 1.0), (272, 1.0)],
            true_u: vec![-1.0, 0.5, 1.0],
            collinear_map: vec![
                CollinearRule::Scaled {
                    target: 275,
                    source: 147,
                    factor: 2.0,
                },
                CollinearRule::Scaled {
                    target: 276,
                    source: 259,
                    factor: -1.0,
                },
                CollinearRule::Combination {
                    target: 277,
                    a: 262,
                    b: 272,
                    sign: 1.0,
                },
            ],
            seed,
        }
    }

    pub fn p(&self) -> usize {
        self.p_base + self.collinear_map.len()
    }
}

/// Structural stand-in for a microarray study with three hospitals.
pub fn generate_analog(spec: &AnalogSpec) -> Result<(Dataset, Dataset, SimTruth)> {
    if spec.block == 0 || !(0.0..1.0).contains(&spec.within_block_correlation) {
        return Err(Error::Config("invalid block correlation structure".into()));
    }
    let mut rng = RngStream::new(spec.seed, 0);
    let n = spec.n_train + spec.n_valid;
    let p = spec.p();
    let rho = spec.within_block_correlation;
    let n_blocks = spec.p_base.div_ceil(spec.block);
    let mut base = DMatrix::zeros(n, spec.p_base);
    for i in 0..n {
        let factors: Vec<f64> = (0..n_blocks).map(|_| standard_normal(&mut rng)).collect();
        for j in 0..spec.p_base {
            let e = standard_normal(&mut rng);
            base[(i, j)] =
                spec.column_sd * (rho.sqrt() * factors[j / spec.block] + (1.0 - rho).sqrt() * e);
        }
    }
    let x = append_constructed(&base, &spec.collinear_map, p);
    let mut beta = DVector::zeros(p);
    for &(j, b) in &spec.signal {
        beta[j] = b;
    }
    let levels = spec.true_u.len();
    let train = probit_split(
        x.rows(0, spec.n_train).into_owned(),
        &contiguous_levels(spec.n_train, levels),
        &beta,
        &spec.true_u,
        &mut rng,
    )?;
    let valid = probit_split(
        x.rows(spec.n_train, spec.n_valid).into_owned(),
        &contiguous_levels(spec.n_valid, levels),
        &beta,
        &spec.true_u,
        &mut rng,
    )?;
    let generating: Vec<usize> = spec.signal.iter().map(|&(j, _)| j).collect();
    let truth = SimTruth {
        seed: spec.seed,
        relevant: relevant_set(&generating, &spec.collinear_map),
        generating,
        true_beta: spec.signal.iter().map(|&(_, b)| b).collect(),
        true_u: spec.true_u.clone(),
        collinear_map: spec.collinear_map.clone(),
        train_trace_xtx: trace_xtx(train.x()),
        train_class_balance: train.class_balance(),
        valid_class_balance: valid.class_balance(),
    };
    Ok((train, valid, truth))
}

/// [`generate_analog`] with its default layout.
pub fn generate_microarray_analog(seed: u64) -> Result<(Dataset, Dataset, SimTruth)> {
    generate_analog(&AnalogSpec::default_with_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_relevant_set_has_twelve_variables() {
        let spec = SimSpec::standard_design(1);
        let generating: Vec<usize> = (0..5).collect();
        let rel = relevant_set(&generating, &spec.collinear_map);
        assert_eq!(rel, vec![0, 1, 2, 3, 4, 280, 281, 282, 283, 284, 290, 291]);
    }

    #[test]
    fn levels_are_contiguous_blocks() {
        assert_eq!(contiguous_levels(6, 3), vec![0, 0, 1, 1, 2, 2]);
        assert_eq!(contiguous_levels(7, 3), vec![0, 0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn inconsistent_spec_rejected() {
        let mut spec = SimSpec::standard_design(1);
        spec.n_train = 99;
        assert!(generate_simulated(&spec).is_err());
        let mut spec = SimSpec::standard_design(1);
        spec.collinear_map.pop();
        spec.collinear_map.push(CollinearRule::Scaled {
            target: 299,
            source: 285,
            factor: 1.0,
        });
        assert!(spec.validate().is_err());
    }
}
