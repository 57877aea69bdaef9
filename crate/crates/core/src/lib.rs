#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Data augmentation and sandwich samplers: finite-state spectral
//! comparison, Bayesian quantile regression, and supporting numerics.

pub mod bounds;
pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod quantreg;
pub mod record;
pub mod speclab;

pub use error::{Error, Result};

/// Crate version, embedded in every output record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
