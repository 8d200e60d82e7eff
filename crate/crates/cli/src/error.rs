use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sscag::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse failure class, printed with every error and mapped to an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Data => "data",
            ErrorKind::Numerical => "numerical",
        })
    }
}

impl CliError {
    pub fn kind(&self) -> ErrorKind {
        use sscag::Error as E;
        match self {
            CliError::Usage(_) => ErrorKind::Usage,
            CliError::Io { .. } => ErrorKind::Data,
            CliError::Core(e) => match e {
                E::InvalidParameter(_) | E::InfeasibleK { .. } | E::InfeasibleSpec(_) => {
                    ErrorKind::Usage
                }
                E::RankDeficient { .. } | E::DegenerateInput(_) | E::SizeGuard { .. } => {
                    ErrorKind::Numerical
                }
                _ => ErrorKind::Data,
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Usage => EXIT_USAGE,
            ErrorKind::Data => EXIT_DATA,
            ErrorKind::Numerical => EXIT_NUMERICAL,
        }
    }

    /// Single line: `error: <kind>: <message>` with newlines flattened.
    pub fn report(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error: {}: {msg}", self.kind())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
