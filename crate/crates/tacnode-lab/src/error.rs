use std::path::PathBuf;

use tacnode_tiling::TilingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Tiling(#[from] TilingError),
    #[error(transparent)]
    Core(#[from] tacnode_core::Error),
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config { field: field.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 1 for configuration and file problems, 2 for failed or unsupported
    /// evaluations, 3 for a region that admits no tiling.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config { .. } | Self::Io { .. } | Self::Csv(_) | Self::Json(_) => 1,
            Self::Verification(_) | Self::Core(_) => 2,
            Self::Tiling(TilingError::Untileable(_)) => 3,
            Self::Tiling(TilingError::Core(_)) => 2,
            Self::Tiling(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
