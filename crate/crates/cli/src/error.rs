use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    /// One or more oracle checks failed.
    #[error("{failed} of {total} invariant checks failed")]
    Invariant { failed: usize, total: usize },

    /// One or more sweep cells failed; the others were still written.
    #[error("{failed} of {total} estimation cells failed")]
    Estimation { failed: usize, total: usize },

    #[error(transparent)]
    Core(#[from] qnee_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Invariant { .. } => 2,
            CliError::Estimation { .. } => 3,
            CliError::Core(
                qnee_core::Error::Training { .. }
                | qnee_core::Error::Estimation { .. }
                | qnee_core::Error::Range(_),
            ) => 3,
            CliError::Core(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
