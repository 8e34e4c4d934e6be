//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Thresholding produced no foreground component to localize.
    #[error("face not found: no foreground component above threshold")]
    FaceNotFound,

    #[error("degenerate mesh: triangle {triangle} has near-zero area")]
    DegenerateMesh { triangle: usize },

    /// The precomputed fitting normal equations are not invertible.
    #[error("rank-deficient model: fitting normal equations are not positive definite")]
    RankDeficientModel,

    #[error("over-truncation: {remaining} of {total} canonical pixels would remain (less than 50%)")]
    OverTruncation { remaining: usize, total: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no model fits: every ensemble member failed")]
    NoModelFits,

    #[error("insufficient overlap: {overlap} common pixels, need at least {required}")]
    InsufficientOverlap { overlap: usize, required: usize },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::MalformedFile {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
