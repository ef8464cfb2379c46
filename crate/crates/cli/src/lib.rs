//! File formats and plotting for the `rootlocus` command.

pub mod output;
pub mod problem;
pub mod svg;

use std::path::PathBuf;

/// Failures of the command-line front end, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Validation { path: PathBuf, message: String },
    #[error("numerical failure: {0}")]
    Numerical(#[from] rootlocus::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Write { .. } => 1,
            CliError::Parse { .. } => 2,
            CliError::Validation { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }
}
