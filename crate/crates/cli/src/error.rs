use std::path::PathBuf;

use thiserror::Error;

/// Everything that ends a run early, with its exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("unknown key: {0}")]
    UnknownKey(String),
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{0}")]
    Domain(#[from] qtraj_core::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(path: &str, message: &str) -> Self {
        CliError::Config {
            path: path.to_string(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Read { .. }
            | CliError::Syntax(_)
            | CliError::UnknownKey(_)
            | CliError::Config { .. }
            | CliError::Invalid(_) => 3,
            CliError::Domain(_) | CliError::Write { .. } => 2,
        }
    }
}
