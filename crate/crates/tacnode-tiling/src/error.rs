use thiserror::Error;

#[derive(Debug, Error)]
pub enum TilingError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("region admits no tiling: {0}")]
    Untileable(String),
    #[error("line {eta} outside the valid range [{lo}, {hi}]")]
    OutOfRange { eta: i64, lo: i64, hi: i64 },
    #[error(transparent)]
    Core(#[from] tacnode_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TilingError>;
