use kreiss_core::KreissError;
use thiserror::Error;

use crate::format::ParseError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{origin}: {error}")]
    Parse { origin: String, error: ParseError },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] KreissError),

    /// A core error with the input that triggered it.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: KreissError,
    },
}

impl CliError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Io { .. } => EXIT_USAGE,
            CliError::Core(e) | CliError::Context { source: e, .. } => core_exit_code(e),
        }
    }
}

/// Malformed arguments are usage errors; everything the numerics reject is
/// reported as a numerical or infeasibility failure.
fn core_exit_code(e: &KreissError) -> i32 {
    match e {
        KreissError::Dimension(_) | KreissError::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
