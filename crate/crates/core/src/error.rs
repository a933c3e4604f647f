use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The sample does not contain the order statistics a rule needs.
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    /// A rule configuration cannot produce a meaningful stopping point.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data violates a record or sample invariant.
    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("replication {rep} (seed {seed:#018x}) failed: {source}")]
    Replication {
        rep: usize,
        seed: u64,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
