//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("image dimensions {0}x{1} below the 8x8 minimum")]
    TooSmall(usize, usize),
    #[error("buffer of {got} values does not match {width}x{height}")]
    BadLength {
        width: usize,
        height: usize,
        got: usize,
    },
    #[error("mask contains no foreground pixels")]
    EmptyMask,
    #[error("image is constant; no threshold separates two classes")]
    ConstantImage,
    #[error("empty pixel set")]
    EmptyPixelSet,
    #[error("contour is empty; slice cannot be sampled")]
    EmptyContour,
    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible phantom geometry: {0}")]
    InfeasibleGeometry(String),
    #[error("ground-truth masks are required but missing")]
    MissingGroundTruth,
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
