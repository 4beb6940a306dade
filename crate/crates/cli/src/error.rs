use std::io;

/// Failures surfaced to the command line, each with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Budget(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// 2 for bad input, 3 when an exact search would exceed its budget.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Budget(_) => 3,
            CliError::Input(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<infoseq_core::Error> for CliError {
    fn from(e: infoseq_core::Error) -> Self {
        match e {
            infoseq_core::Error::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("JSON: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
