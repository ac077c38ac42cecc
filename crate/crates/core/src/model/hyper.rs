use serde::{Deserialize, Serialize};

use super::{calibrate_tau, default_lambda, Dataset};
use crate::error::{Error, Result};

/// Hyper-parameters of the ridge g-prior, the inclusion prior and the
/// random-effect variance prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeHyper {
    /// Base coefficient `τ₀` the calibration started from; `None` when `τ`
    /// was set directly.
    pub tau0: Option<f64>,
    pub tau: f64,
    pub lambda: f64,
    /// Prior inclusion probability of each variable.
    pub pi: Vec<f64>,
    pub ig_shape: f64,
    pub ig_scale: f64,
}

impl RidgeHyper {
    /// `λ = max(1/p, ε)` and `τ` calibrated on the full design.
    pub fn calibrated(
        data: &Dataset,
        tau0: f64,
        epsilon: f64,
        expected_size: f64,
        ig_shape: f64,
        ig_scale: f64,
    ) -> Result<Self> {
        let p = data.p();
        if p == 0 {
            return Err(Error::Calibration("design has no variables".into()));
        }
        let lambda = default_lambda(p, epsilon);
        let trace = super::trace_xtx(data.x());
        let tau = calibrate_tau(tau0, trace, p, lambda)?;
        let hyper = Self {
            tau0: Some(tau0),
            tau,
            lambda,
            pi: vec![expected_size / p as f64; p],
            ig_shape,
            ig_scale,
        };
        hyper.validate(p)?;
        Ok(hyper)
    }

    /// Fixed `τ` and `λ` without calibration.
    pub fn fixed(
        p: usize,
        tau: f64,
        lambda: f64,
        expected_size: f64,
        ig_shape: f64,
        ig_scale: f64,
    ) -> Result<Self> {
        let hyper = Self {
            tau0: None,
            tau,
            lambda,
            pi: vec![expected_size / p.max(1) as f64; p],
            ig_shape,
            ig_scale,
        };
        hyper.validate(p)?;
        Ok(hyper)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("tau", self.tau)?;
        positive("lambda", self.lambda)?;
        positive("ig_shape", self.ig_shape)?;
        positive("ig_scale", self.ig_scale)?;
        if let Some(tau0) = self.tau0 {
            positive("tau0", tau0)?;
        }
        if self.pi.len() != p {
            return Err(Error::Config(format!(
                "{} inclusion probabilities for {p} variables",
                self.pi.len()
            )));
        }
        if let Some(bad) = self.pi.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Config(format!(
                "inclusion probabilities must lie in (0, 1), got {bad}"
            )));
        }
        Ok(())
    }
}
