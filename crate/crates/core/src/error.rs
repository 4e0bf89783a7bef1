use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value violates its invariant.
    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("unknown configuration key `{key}` at `{path}`")]
    UnknownKey { path: String, key: String },

    #[error("missing required configuration fields: {}", .fields.join(", "))]
    MissingFields { fields: Vec<String> },

    #[error("malformed input: {0}")]
    Input(String),

    #[error("non-finite value in field `{field}` at cell ({i}, {j})")]
    NonFinite {
        field: &'static str,
        i: usize,
        j: usize,
    },

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
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
