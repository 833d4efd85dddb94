use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("data directory not found: {0}")]
    MissingDirectory(PathBuf),
    #[error("no samples found under {0}")]
    NoSamples(PathBuf),
    #[error("cannot decode image {path}: {reason}")]
    Decode { path: PathBuf, reason: String },
    #[error("cannot write {path}: {reason}")]
    Write { path: PathBuf, reason: String },
    #[error("image {path} is {actual:?}, expected {expected:?}")]
    Dimensions {
        path: PathBuf,
        expected: (u32, u32),
        actual: (u32, u32),
    },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("checkpoint not found: {0}")]
    CheckpointNotFound(PathBuf),
    #[error("invalid checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
    #[error("checkpoint {path} does not match the configured codec: {reason}")]
    CheckpointMismatch { path: PathBuf, reason: String },
    #[error("unknown image id {id:?}; valid ids: {valid}")]
    UnknownImage { id: String, valid: String },
    #[error("no run records with sweep rows to plot")]
    EmptyRecords,
    #[error("invalid run record {path}: {reason}")]
    Record { path: PathBuf, reason: String },
    #[error("training diverged at epoch {epoch}: {source}")]
    Diverged {
        epoch: usize,
        #[source]
        source: semcom_core::Error,
    },
    #[error("plot: {0}")]
    Plot(String),
    #[error(transparent)]
    Core(#[from] semcom_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
