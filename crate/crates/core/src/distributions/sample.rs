use nalgebra::DVector;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::erf::{erfc, erfc_inv};

use super::{RngStream, SpdFactor};
use crate::error::{Error, Result};

/// Standardized truncation bound above which exponential rejection replaces
/// the inverse-CDF method.
const TAIL_SWITCH: f64 = 4.0;

/// Which side of zero a truncated normal is restricted to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    /// Left truncated at 0: support `(0, ∞)`.
    Left,
    /// Right truncated at 0: support `(−∞, 0)`.
    Right,
}

pub fn standard_normal(rng: &mut RngStream) -> f64 {
    StandardNormal.sample(rng)
}

/// Standard normal CDF `Φ(−a)`, accurate in the upper tail.
fn upper_tail(a: f64) -> f64 {
    0.5 * erfc(a / std::f64::consts::SQRT_2)
}

/// Draws `z ~ N(0, 1)` conditioned on `z > a`.
fn standard_normal_above(a: f64, rng: &mut RngStream) -> f64 {
    if a > TAIL_SWITCH {
        // Robert (1995) translated-exponential proposal with the optimal rate.
        let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let z = a - rng.uniform_open01().ln() / alpha;
            let d = z - alpha;
            if rng.uniform_open01().ln() <= -0.5 * d * d {
                return z;
            }
        }
    }
    // −z is N(0,1) restricted to (−∞, −a], whose CDF at −a is Φ(−a).
    let mass = upper_tail(a);
    loop {
        let p = rng.uniform_open01() * mass;
        // Φ⁻¹(p) = −√2 erfc⁻¹(2p)
        let z = std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
        if z > a && z.is_finite() {
            return z;
        }
    }
}

/// Normal draw restricted to one side of zero.
///
/// The returned value always carries the sign required by `side`; the sampler
/// stays exact for standardized distances of at least 40 from the bound.
pub fn sample_truncated_normal(
    mean: f64,
    sd: f64,
    side: Truncation,
    rng: &mut RngStream,
) -> Result<f64> {
    if !mean.is_finite() || !sd.is_finite() || sd <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "truncated normal needs finite mean and positive sd (mean = {mean}, sd = {sd})"
        )));
    }
    loop {
        let x = match side {
            Truncation::Left => mean + sd * standard_normal_above(-mean / sd, rng),
            Truncation::Right => mean - sd * standard_normal_above(mean / sd, rng),
        };
        // Rounding can land exactly on the bound when |mean| ≫ sd.
        let ok = match side {
            Truncation::Left => x > 0.0,
            Truncation::Right => x < 0.0,
        };
        if ok {
            return Ok(x);
        }
    }
}

/// Draw from `N(mean, P⁻¹)` given the Cholesky factor of the precision `P`.
pub fn sample_mvn(
    mean: &DVector<f64>,
    precision_factor: &SpdFactor,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    if mean.len() != precision_factor.dim() {
        return Err(Error::DimensionMismatch(format!(
            "mean of length {} against precision of dimension {}",
            mean.len(),
            precision_factor.dim()
        )));
    }
    let z = DVector::from_fn(mean.len(), |_, _| standard_normal(rng));
    Ok(precision_factor.solve_upper(&z)? + mean)
}

/// Gamma draw with the given shape and scale.
pub fn sample_gamma(shape: f64, scale: f64, rng: &mut RngStream) -> Result<f64> {
    if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma needs positive shape and scale (shape = {shape}, scale = {scale})"
        )));
    }
    let dist = Gamma::new(shape, scale).map_err(|e| {
        Error::InvalidParameter(format!("gamma(shape = {shape}, scale = {scale}): {e}"))
    })?;
    Ok(dist.sample(rng))
}

/// Inverse-gamma draw; density ∝ x^(−shape−1) exp(−scale / x).
pub fn sample_inverse_gamma(shape: f64, scale: f64, rng: &mut RngStream) -> Result<f64> {
    if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "inverse gamma needs positive shape and scale (shape = {shape}, scale = {scale})"
        )));
    }
    // 1/X ~ IG(shape, scale) when X ~ Gamma(shape, rate = scale).
    loop {
        let g = sample_gamma(shape, 1.0 / scale, rng)?;
        if g > 0.0 {
            return Ok(1.0 / g);
        }
    }
}

/// Inverse-Gaussian draw with mean `mu` and shape `shape`
/// (Michael, Schucany and Haas transformation).
pub fn sample_inverse_gaussian(mu: f64, shape: f64, rng: &mut RngStream) -> Result<f64> {
    if !(mu > 0.0 && shape > 0.0 && mu.is_finite() && shape.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "inverse Gaussian needs positive finite mean and shape (mu = {mu}, shape = {shape})"
        )));
    }
    let nu = standard_normal(rng);
    let t = mu * nu * nu / (2.0 * shape);
    // Smaller root of the quadratic, written as μ / (1 + t + √(t² + 2t)) to
    // avoid cancellation when t is large.
    let x = mu / (1.0 + t + (t * t + 2.0 * t).sqrt());
    if rng.uniform_open01() * (mu + x) <= mu {
        Ok(x)
    } else {
        Ok(mu * (mu / x))
    }
}
