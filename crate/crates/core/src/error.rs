use thiserror::Error;

/// Errors surfaced by the store, the ring and the simulation runtime.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("stale write: stamp {incoming} is not newer than stored {stored}")]
    StaleWrite { incoming: String, stored: String },
    #[error("stream `{0}` is already registered")]
    DuplicateStream(String),
    #[error("no replica available for key `{0}`")]
    Unavailable(String),
    #[error("simulation did not quiesce within {0} events")]
    NonQuiescent(u64),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A scenario parse failure, pointing at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}
