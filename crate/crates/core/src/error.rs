use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("out of range: {0}")]
    Range(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("numerically degenerate: {0}")]
    Numeric(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
