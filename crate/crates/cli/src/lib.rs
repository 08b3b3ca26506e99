//! Batch front end: load a study, run one command, write tabular outputs and
//! a plain-text report.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

pub use commands::{run, Command, Outcome};
pub use config::{Overrides, Study, StudyConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] dampcert_core::Error),
    /// A certificate passed while the pole oracle found poles in the domain.
    #[error("certificate and pole oracle disagree: {0}")]
    Inconsistent(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Core(dampcert_core::Error::Config(_)) => 3,
            CliError::Core(_) | CliError::Io { .. } | CliError::Inconsistent(_) => 1,
        }
    }
}
