//! Random variate generators and SPD linear algebra shared by both samplers.

mod linalg;
mod rng;
mod sample;

pub(crate) use linalg::{cholesky_in_place, forward_substitute};
pub use linalg::{spd_factorize, SpdFactor};
pub use rng::RngStream;
pub use sample::{
    sample_gamma, sample_inverse_gamma, sample_inverse_gaussian, sample_mvn,
    sample_truncated_normal, standard_normal, Truncation,
};
