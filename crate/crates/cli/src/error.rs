use std::path::PathBuf;

use thiserror::Error;

/// Validation failures exit with 2, runtime and model failures with 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid scenario: {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("{context}: {source}")]
    Model {
        context: String,
        source: radsim_core::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn model(context: impl Into<String>) -> impl FnOnce(radsim_core::Error) -> Self {
        let context = context.into();
        move |source| CliError::Model { context, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } | CliError::Parse { .. } | CliError::Invalid { .. } => 2,
            CliError::Model { .. } | CliError::Write { .. } => 3,
        }
    }
}
