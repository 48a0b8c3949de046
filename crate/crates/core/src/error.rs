use thiserror::Error;

/// Errors produced anywhere in the search and verification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("numerical failure: {message}")]
    Numerical {
        message: String,
        best_estimate: Option<f64>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("lifecycle error: {0}")]
    Lifecycle(&'static str),

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("unknown conjecture id {id}; valid ids are {valid}")]
    UnknownConjecture { id: u32, valid: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
