use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the physical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A resistor quad violates its structural invariants.
    #[error("invalid resistor quad: {0}")]
    InvalidQuad(String),

    /// The requested construction has no physical solution.
    #[error("unphysical solution: {0}")]
    Unphysical(String),

    /// The scheme or experiment configuration cannot be used.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// An operation was called with arguments that do not fit together.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
