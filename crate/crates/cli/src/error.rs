use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Parse(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// Process exit code: 1 usage, 2 I/O or parse, 3 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Parse(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<hiercp_core::Error> for CliError {
    fn from(err: hiercp_core::Error) -> Self {
        use hiercp_core::Error as E;
        match err {
            E::Parse { .. } | E::Malformed(_) | E::EmptyInput | E::UnknownNode(_) => {
                CliError::Parse(err.to_string())
            }
            E::InvalidConfig(_) | E::InvalidParams(_) => CliError::Usage(err.to_string()),
            E::StateSpaceTooLarge { .. } | E::Contract(_) => CliError::Internal(err.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
