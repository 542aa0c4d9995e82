use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_OUTPUT: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("cannot write output {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] sensoralloc::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use sensoralloc::Error as E;
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Output { .. } => EXIT_OUTPUT,
            CliError::Core(E::Io(_)) => EXIT_OUTPUT,
            CliError::Core(E::Domain { .. } | E::Invalid { .. } | E::SpectrumHole { .. } | E::GridMismatch(_)) => {
                EXIT_CONFIG
            }
            CliError::Core(_) => EXIT_FAILURE,
        }
    }
}
