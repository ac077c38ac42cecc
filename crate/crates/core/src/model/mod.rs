//! Probit mixed model types, ridge g-prior algebra and the collapsed
//! conditional of the inclusion vector.

mod collapsed;
mod dataset;
mod gamma;
mod hyper;
mod prior;

pub use collapsed::{
    log_acceptance_ratio, log_integrated_gamma_density, GammaDensity, ResidualStats,
};
pub use dataset::Dataset;
pub use gamma::GammaVector;
pub use hyper::RidgeHyper;
pub(crate) use prior::gram_submatrix;
pub use prior::{
    calibrate_tau, default_lambda, log_det_ratio, posterior_coef_precision, ridge_prior_precision,
    trace_xtx,
};
