use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {path}: {reason}")]
    Config { path: String, reason: String },

    #[error("cannot parse {file}: {message}")]
    Parse { file: PathBuf, message: String },

    #[error("{file}: {source}")]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}, line {line}: {source}")]
    Snapshot {
        file: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("snapshot format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("{0} holds no snapshot records")]
    EmptyTrajectory(PathBuf),

    #[error("no checks selected")]
    NoChecks,

    #[error("unknown check {0:?}; known checks: gauss-bonnet, area-law, harnack, k-evolution, length, mode-decay")]
    UnknownCheck(String),

    #[error("sweep spec is empty: {0}")]
    EmptySweep(&'static str),

    #[error("{failed} of {total} sweep cells failed")]
    SweepFailures { failed: usize, total: usize },

    #[error(transparent)]
    Engine(#[from] csf_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub(crate) fn io(file: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let file = file.into();
        move |source| CliError::Io { file, source }
    }
}
