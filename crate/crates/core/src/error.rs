use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument or configuration value is outside its valid domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Two pieces of state that must describe the same experiment do not.
    #[error("inconsistent accumulator: {0}")]
    Consistency(String),

    #[error("cannot summarize an accumulator with zero trials")]
    EmptyAccumulator,

    #[error("diversity estimation failed: {0}")]
    Estimation(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
