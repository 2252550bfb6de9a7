use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the recovery library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },

    #[error("buffer holds {actual} samples, expected {expected}")]
    BufferSize { expected: usize, actual: usize },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("count mismatch: expected {expected} items, got {actual}")]
    CountMismatch { expected: usize, actual: usize },

    #[error("an image stack needs at least 2 frames, got {0}")]
    TooFewFrames(usize),

    #[error("image {width}x{height} is smaller than one {region_size}px superpixel cell")]
    ImageTooSmall {
        width: usize,
        height: usize,
        region_size: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{path}: lossy JPEG input rejected (pass the lossy override to accept it)")]
    LossyInput { path: PathBuf },

    #[error("{path}: unsupported pixel layout {layout}")]
    UnsupportedLayout { path: PathBuf, layout: String },

    #[error("{path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("scene script line {line}: {reason}")]
    Script { line: usize, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
