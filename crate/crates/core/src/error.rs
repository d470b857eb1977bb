use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed problem data (non-symmetric or indefinite matrix, bad box, ...).
    #[error("rejected input: {0}")]
    RejectedInput(String),

    /// Solver or certificate configuration that violates a hypothesis of the
    /// method (step above 1/L, alpha below 3, unknown mu for the known-mu variant).
    #[error("rejected configuration: {0}")]
    RejectedConfig(String),

    /// A stored quantity contradicts the reference optimum, e.g. F(y_k) far below F*.
    #[error("data corruption: {0}")]
    DataCorruption(String),

    #[error("reference solution unavailable: {0}")]
    ReferenceUnavailable(String),

    #[error("rate fit unavailable: {0}")]
    FitUnavailable(String),

    /// Trace or report file that cannot be parsed or has an incompatible version.
    #[error("trace format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
