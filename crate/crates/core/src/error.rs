use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum OamError {
    /// Two operands live on different grids, wavelengths or planes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A field would be clipped by the window or aliased by the sampling.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// The requested turbulence is finer than the grid can resolve.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A matrix or state violates its structural invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// An ensemble or matrix carries no usable weight.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A decay curve never reaches the requested level.
    #[error("range error: {0}")]
    Range(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("thread pool: {0}")]
    ThreadPool(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = OamError> = std::result::Result<T, E>;
