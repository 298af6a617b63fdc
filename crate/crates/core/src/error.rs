use chrono::{DateTime, Utc};

use crate::geogrid::Variable;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("frame {frame}: time {next} does not follow {prev}")]
    Ordering {
        frame: usize,
        prev: DateTime<Utc>,
        next: DateTime<Utc>,
    },

    #[error("frame {frame}: {message}")]
    Payload { frame: usize, message: String },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("empty stack")]
    EmptyStack,

    #[error("empty subset: no cell center of the grid lies inside {0}")]
    EmptySubset(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("expected a {expected} grid, got {found}")]
    WrongVariable { expected: Variable, found: Variable },

    #[error("track {0} has undefined motion (fewer than two observations)")]
    UndefinedMotion(u32),

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("empty time window")]
    EmptyWindow,

    #[error("unknown region {0:?}")]
    UnknownRegion(String),

    #[error("unknown geophysical model function {0:?}")]
    UnknownGmf(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("no warnings inside the validation window")]
    NoWarnings,

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("{context}: {inner}")]
    Context { context: String, inner: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            inner: Box::new(self),
        }
    }

    /// The error beneath any added context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { inner, .. } => inner.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
