use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),

    /// An independent check disagreed with the closed form.
    #[error("oracle mismatch: {0}")]
    Oracle(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("computation failed: {0}")]
    Computation(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Computation(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Oracle(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<tfe_core::Error> for CliError {
    fn from(e: tfe_core::Error) -> Self {
        match e {
            tfe_core::Error::Computation(msg) => CliError::Computation(msg),
            other => CliError::Validation(other.to_string()),
        }
    }
}
