//! Bayesian variable selection for probit mixed models: a stochastic search
//! sampler under a ridge-regularized g-prior, a Bayesian Lasso baseline,
//! post-processing of selection counts and seeded simulation designs.

pub mod blasso;
pub mod distributions;
pub mod error;
pub mod gibbs;
pub mod io;
pub mod model;
pub mod oracle;
pub mod postprocess;
pub mod simdata;
pub mod ssvs;

pub use error::{Error, Result};

/// Version tag written into every serialized output.
pub const SCHEMA_VERSION: u32 = 1;
