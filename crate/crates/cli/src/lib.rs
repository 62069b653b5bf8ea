//! Case files, run orchestration and artifact output for the `blockfv` binary.

pub mod config;
pub mod output;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{parse_config, CaseConfig};
pub use run::{run_case, CaseOutcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
