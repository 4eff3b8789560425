use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("problem dimension n = {n} is below the minimum of 4")]
    DimensionTooSmall { n: usize },

    #[error(
        "population size mu = {requested} is not well-behaved for n = {n}: (1 - 2/n) * mu must be an even integer \
         (nearest valid below: {}, above: {above})",
        below.map_or_else(|| "none".to_string(), |b| b.to_string())
    )]
    InvalidMu {
        n: usize,
        requested: u64,
        below: Option<u64>,
        above: u64,
    },

    #[error("population size must be at least 1")]
    ZeroMu,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("frequency index {index} at position {position} exceeds the largest index {max}")]
    IndexOutOfRange {
        position: usize,
        index: u32,
        max: u32,
    },

    #[error("invalid fitness specification: {0}")]
    InvalidFitness(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension n = {n} is too large for exhaustive enumeration (limit {limit})")]
    TooLargeForEnumeration { n: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
