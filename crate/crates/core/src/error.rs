use thiserror::Error;

/// Errors raised by the laboratory.
///
/// `field` paths use dotted notation (`ensemble.W`) so that the runner can
/// report exactly which configuration value was rejected.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {message}")]
    InvalidParameter { field: String, message: String },

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("{what} did not converge after {iterations} iterations (best estimate {estimate:e}, residual {residual:e})")]
    NonConvergence {
        what: String,
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("algorithm failure: {0}")]
    Algorithm(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the caller's parameters rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParameter { .. } | Error::SizeCap(_))
    }
}
