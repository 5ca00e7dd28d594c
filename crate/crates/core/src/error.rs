use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left} vs {right}")]
    Shape {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("index {index} out of range for field {field} with {buckets} buckets")]
    Bounds {
        field: usize,
        index: usize,
        buckets: usize,
    },

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("invalid config `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid state: {0}")]
    State(String),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: impl ToString, right: impl ToString) -> Self {
        Error::Shape {
            op,
            left: left.to_string(),
            right: right.to_string(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
