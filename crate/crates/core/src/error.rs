use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Property violations found by the verification routines are *not* errors;
/// those come back as reports with a `passed` flag.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: String,
        reason: String,
    },

    #[error("matrix is not positive definite: leading minor {minor} is not positive")]
    NotPositiveDefinite { minor: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("kernel is not reversible: symmetrization residual {residual:e} exceeds {tolerance:e}")]
    Reversibility { residual: f64, tolerance: f64 },

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("operator is not positive: eigenvalue {eigenvalue:e} below -{tolerance:e}")]
    Positivity { eigenvalue: f64, tolerance: f64 },

    #[error("sandwich step requires r = 1/2 (median regression), got r = {0}")]
    UnsupportedQuantile(f64),

    #[error("posterior is not integrable: {0}")]
    Propriety(String),

    #[error("{context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parameter(name: &'static str, value: impl ToString, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            value: value.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
