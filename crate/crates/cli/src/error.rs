use std::io;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad command line.
    #[error("{0}")]
    Usage(String),
    /// Config, input file or parameter rejected before or during a run.
    #[error("{0}")]
    Validation(String),
    /// A numerical routine failed.
    #[error("{0}")]
    Numeric(String),
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: io::Error },
    /// Outputs were written but at least one requested check failed.
    #[error("failed checks: {}", .0.join(", "))]
    ChecksFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numeric(_) | CliError::Output { .. } | CliError::ChecksFailed(_) => 3,
        }
    }
}

impl From<modavg::Error> for CliError {
    fn from(e: modavg::Error) -> Self {
        match e {
            modavg::Error::Numeric(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Validation(msg.into()))
}
