use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the saliency engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("extent mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    ExtentMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("value {value} out of range for {what}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("tensor header magic mismatch: found {found:?}")]
    MagicMismatch { found: [u8; 4] },

    #[error("unsupported tensor version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated tensor payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("tensor dims {dims:?} overflow addressable size")]
    DimOverflow { dims: Vec<u64> },

    #[error("tensor has {extra} trailing bytes after payload")]
    TrailingBytes { extra: usize },

    #[error("malformed {kind} file {path}: {reason}")]
    Malformed {
        kind: &'static str,
        path: PathBuf,
        reason: String,
    },

    #[error("depth map has no valid measurements")]
    NoValidDepth,

    #[error("{0} requires at least one positive and one negative ground-truth pixel")]
    SingleClassMask(String),

    #[error("missing {0}")]
    Missing(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(kind: &'static str, path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Malformed {
            kind,
            path: path.into(),
            reason: reason.into(),
        }
    }
}
