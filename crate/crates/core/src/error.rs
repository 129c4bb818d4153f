use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method or quadrature failed to reach its tolerance.
    #[error("no convergence: {msg} (best estimate {estimate:e})")]
    NoConvergence { msg: String, estimate: f64 },

    /// A result violated a mathematical invariant (e.g. a negative density).
    #[error("internal consistency error: {0}")]
    Internal(String),

    /// Malformed scenario file or CLI input.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
