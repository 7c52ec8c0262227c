use std::path::PathBuf;

use proxyhpo::ErrorCategory;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Trainer(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Core(#[from] proxyhpo::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Internal(_) => 2,
            CliError::Trainer(_) => 3,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Usage => 1,
                ErrorCategory::Data => 2,
                ErrorCategory::Trainer => 3,
            },
        }
    }
}

pub fn missing(flag: &str) -> CliError {
    CliError::Usage(format!("missing required --{flag}"))
}
