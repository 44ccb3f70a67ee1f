use thiserror::Error;

/// Errors raised by the numerical layers (measures, transport, flow, diagnostics).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input violates a structural invariant (weights, shapes, normalization).
    #[error("validation error: {0}")]
    Validation(String),

    /// A parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Direction-set mode not applicable in the requested dimension.
    #[error("direction mode error: {0}")]
    Mode(String),

    /// A quadrature or estimator failed to produce a trustworthy number.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Time integration produced a non-finite state.
    #[error("integration error at step {step}: {message}")]
    Integration { step: usize, message: String },

    /// Problem too large for an exact solver.
    #[error("size error: {0}")]
    Size(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
