use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    UnsupportedChannels(u8),

    #[error("invalid image dimensions {width}x{height}")]
    InvalidDimensions { width: u32, height: u32 },

    #[error("raster data length {actual} does not match {expected}")]
    DataLength { expected: usize, actual: usize },

    #[error("gaussian kernel {kernel} must be odd and no larger than {limit}")]
    InvalidKernel { kernel: u32, limit: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("leaf of side {leaf} at ({x}, {y}) is smaller than patch size {patch}")]
    LeafTooSmall { leaf: u32, x: u32, y: u32, patch: u32 },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },

    #[error("expected {expected} predictions, got {actual}")]
    CountMismatch { expected: usize, actual: usize },

    #[error("corrupt cache: {0}")]
    CorruptCache(String),

    #[error("failed to decode {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by tunables rather than by the input data.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidKernel { .. } | Error::Config(_) | Error::LeafTooSmall { .. }
        )
    }
}
