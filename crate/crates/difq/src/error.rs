use std::io;
use std::path::Path;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_INTERNAL: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input: malformed documents, unknown ids, out-of-range arguments.
    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] difq_core::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    /// A broken invariant inside the tool itself.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io { .. } => EXIT_VALIDATION,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Core(_) => EXIT_VALIDATION,
            CliError::Csv(_) | CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
