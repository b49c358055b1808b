//! Crate-wide error type.

/// Errors surfaced by the library. The CLI maps these to exit-code
/// categories: configuration/usage problems, I/O, and data errors.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("framing error: {0}")]
    Framing(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("undefined value: {0}")]
    UndefinedValue(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
