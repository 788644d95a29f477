//! Crate-wide error type.

/// Errors raised by dataset construction, sampling, losses, training,
/// evaluation and the text codecs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on arguments or data was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The dataset cannot satisfy the requested sampling scheme.
    #[error("sampling failed: {0}")]
    Sampling(String),

    /// A numeric domain error (zero-vector normalization, non-finite loss
    /// evaluation inside the finite-difference oracle, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Training produced a non-finite loss and was aborted.
    #[error("training diverged at iteration {iteration}: loss is not finite")]
    Diverged { iteration: usize },

    /// A text file did not conform to its format.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn sampling(msg: impl Into<String>) -> Self {
        Error::Sampling(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
