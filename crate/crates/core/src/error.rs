use thiserror::Error;

/// Errors produced by the mining library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An attribute or operation is referenced that the schema does not declare,
    /// or a conjunct/constraint does not match the attribute's kind.
    #[error("schema error: {0}")]
    Schema(String),

    /// Input data is inconsistent (unknown entity, duplicate id, bad frequency).
    #[error("data error: {0}")]
    Data(String),

    /// Text input could not be parsed.
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("empty log")]
    EmptyLog,

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Combinatorial enumeration exceeded its configured cap.
    #[error("enumeration too large: {count} exceeds cap {cap}")]
    TooLarge { count: u128, cap: u128 },

    /// An internal postcondition failed.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
