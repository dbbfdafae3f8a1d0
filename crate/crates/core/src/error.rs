use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A hypothesis on the model parameters does not hold; the message names the inequality.
    #[error("parameter regime violated: {0}")]
    InvalidRegime(String),

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("infeasible scale: {0}")]
    InfeasibleScale(String),

    #[error("index {index} out of range for {bound} points")]
    OutOfRange { index: u64, bound: u64 },

    #[error("{0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn regime<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidRegime(msg.into()))
}
