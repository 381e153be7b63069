use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("value out of range: {0}")]
    Range(String),

    /// Training diverged; carries the `(iteration, train, test)` history up to the failure.
    #[error("training diverged at iteration {iteration}")]
    Training {
        iteration: usize,
        history: Vec<(usize, f64, f64)>,
    },

    /// Every trial of an estimation run failed.
    #[error("estimation failed: all {} trials diverged", .histories.len())]
    Estimation { histories: Vec<Vec<f64>> },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
