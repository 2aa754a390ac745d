use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    /// A structurally valid document that breaks a model invariant.
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{op}: argument {value} outside the domain {domain}")]
    Domain { op: &'static str, value: f64, domain: &'static str },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("four-bar position analysis found no circle intersection (theta = {theta})")]
    NoIntersection { theta: f64 },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    Mismatch { what: &'static str, expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), message: message.into() }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
