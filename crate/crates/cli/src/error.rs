use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}:{line}:{column}: {message}", path.display())]
    Config { path: PathBuf, line: usize, column: usize, message: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("unknown scenario `{0}` (see `rwre preset --list`)")]
    UnknownScenario(String),

    #[error(transparent)]
    Core(#[from] rwre_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),

    #[error("step budget exhausted; partial result written to {}, rerun with --resume", path.display())]
    Partial { path: PathBuf },

    #[error("table `{table}`: {message}")]
    Schema { table: String, message: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
