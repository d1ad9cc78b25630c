//! Error type shared by the whole crate.

use thiserror::Error;

/// Errors produced by synthesis, estimation, and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not match what the operation expects.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// A quantity that must be finite is NaN or infinite.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    /// An integration stage produced a non-finite value.
    #[error("integration fault at t = {t}: non-finite stage value")]
    IntegrationFault { t: f64 },

    /// A matrix that must be invertible (or positive definite) is singular.
    #[error("singular matrix in {context}")]
    Singular { context: &'static str },

    /// An iterative synthesis routine failed to converge.
    #[error("{what} did not converge within the horizon (last residual {residual:.3e})")]
    SynthesisFailure { what: &'static str, residual: f64 },

    /// A configuration the library does not support.
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    /// A matrix expected to be symmetric is not, beyond tolerance.
    #[error("matrix is not symmetric in {context} (max asymmetry {asymmetry:.3e})")]
    Asymmetric {
        context: &'static str,
        asymmetry: f64,
    },

    /// Cost extraction failed, typically because the estimated input-cost
    /// block is singular. Expected during transients; callers may retry later.
    #[error("solution extraction failed: {0}")]
    Extraction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
