use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("support volume is empty")]
    EmptySupport,
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("direction must be a unit vector (norm {0:.6})")]
    NotUnit(f64),
    #[error("basis is not a right-handed orthonormal frame")]
    InvalidBasis,
    #[error("sequence has no frames")]
    EmptySequence,
    #[error("frame timestamps must be strictly increasing")]
    UnorderedFrames,
    #[error("all frames are empty; cannot estimate spatial scale")]
    NoPoints,
    #[error("sigma must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("need at least {min} keypoints, got {got}")]
    TooFewKeypoints { got: usize, min: usize },
    #[error("k-means needs at least {k} samples, got {got}")]
    TooFewSamples { got: usize, k: usize },
    #[error("class {0} has fewer than two training sequences")]
    DegenerateClass(usize),
    #[error("training set must contain at least two distinct classes")]
    DegenerateTraining,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("image: {0}")]
    Image(#[from] image::ImageError),
}

/// A structural problem in a binary or textual container, located by the byte
/// offset at which decoding could not continue.
#[derive(Debug, Error)]
#[error("{kind} at byte offset {offset}")]
pub struct FormatError {
    pub offset: u64,
    pub kind: FormatErrorKind,
}

#[derive(Debug, Error)]
pub enum FormatErrorKind {
    #[error("bad magic, expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("truncated input while reading {what}")]
    Truncated { what: String },
    #[error("declared size of {what} ({declared}) exceeds remaining input")]
    Oversized { what: String, declared: u64 },
    #[error("non-finite value in {what}")]
    NonFinite { what: String },
    #[error("{extra} trailing bytes after payload")]
    Trailing { extra: u64 },
    #[error("{0}")]
    Invalid(String),
}

impl FormatError {
    pub fn new(offset: u64, kind: FormatErrorKind) -> Self {
        FormatError { offset, kind }
    }
}
