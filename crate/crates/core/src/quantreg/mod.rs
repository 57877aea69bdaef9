//! Bayesian linear quantile regression by data augmentation, with the
//! scale-group sandwich step for median regression.

pub mod io;
pub mod model;
pub mod oracle;
pub mod sampler;

pub use model::{reference_dataset, BetaConditional, QuantileModel};
pub use oracle::{quadrature_posterior_mean, quadrature_posterior_moments, PosteriorMoments};
pub use sampler::{
    da_step, run_chain, run_chains, sandwich_step, sandwich_step_with, ChainConfig, ChainKind, ChainState, ChainTrace,
    DEFAULT_BURN_IN,
};
