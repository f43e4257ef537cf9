use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("path is empty")]
    EmptyPath,

    #[error("path is not a cycle")]
    NotACycle,

    #[error("action sequence is empty")]
    EmptySequence,

    #[error("sequence is not strictly enforceable: payoff ({p1}, {p2}) vs minmax ({v1}, {v2})")]
    NotEnforceable {
        p1: String,
        p2: String,
        v1: String,
        v2: String,
    },

    #[error("pair is not a Nash equilibrium")]
    NotNash,

    #[error("invalid machine: {0}")]
    InvalidMachine(String),

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
