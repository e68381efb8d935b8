use thiserror::Error;

/// Failures grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Missing, unreadable or malformed input data.
    #[error("{0}")]
    Input(String),
    /// Invalid configuration or flags.
    #[error("{0}")]
    Config(String),
    /// A result broke an invariant the pipeline relies on.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn input(context: impl std::fmt::Display, err: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{context}: {err}"))
}

pub(crate) fn config(context: impl std::fmt::Display, err: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{context}: {err}"))
}
