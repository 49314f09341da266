use std::path::PathBuf;

use thiserror::Error;

/// Failures of the command-line tool, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure ({context}): {source}")]
    Numerical {
        context: String,
        #[source]
        source: cluster_bifurc_core::Error,
    },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error ({context}): {message}")]
    Format { context: String, message: String },
}

impl AppError {
    pub fn numerical(context: impl Into<String>, source: cluster_bifurc_core::Error) -> Self {
        AppError::Numerical {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Io { .. } | AppError::Format { .. } => 2,
            AppError::Numerical { .. } => 3,
            AppError::Verification(_) => 4,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
