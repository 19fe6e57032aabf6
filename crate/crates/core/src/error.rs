use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for {len} locations")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("matrix of dimension {dim} is not positive definite after jitter {jitter:e}")]
    NotPositiveDefinite { dim: usize, jitter: f64 },

    #[error("factorization failed at ordered index {index} (neighbors {neighbors:?}): {source}")]
    Factorization {
        index: usize,
        neighbors: Vec<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid bounds at coordinate {index}: lower {lower} must be below upper {upper}")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("rejection oracle exhausted {tries} proposals without acceptance")]
    OracleExhausted { tries: u64 },

    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("nothing to sample: no censored locations")]
    NothingToSample,

    #[error("sampling failed at sample {sample}, ordered index {index}: {source}")]
    Sampling {
        sample: usize,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("row {row}: {message}")]
    Data { row: usize, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::Factorization { .. }
            | Error::OracleExhausted { .. }
            | Error::NonFinite(_) => true,
            Error::Sampling { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
