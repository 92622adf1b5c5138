//! Shared error type for the library surface.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text; `line` is 1-based within the source.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Operation called on data in the wrong lifecycle state
    /// (e.g. normalizing twice, or scoring un-normalized columns).
    #[error("invalid state: {0}")]
    State(String),

    /// A dense-path or protocol size limit would be exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Dimension or symmetry mismatch between arguments.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Parameter outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Constraint set is empty for the requested configuration.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
