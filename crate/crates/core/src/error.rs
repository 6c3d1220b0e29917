use thiserror::Error;

/// Errors produced by the rate formulas, oracles, and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("step length {t} outside the admissible interval ({lower}, {upper})")]
    StepOutOfRange { t: f64, lower: f64, upper: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("solution set of this oracle is not available in closed form")]
    UnsupportedOracle,

    #[error("previous iterate already lies in the solution set (zero distance)")]
    ZeroDistance,

    #[error("iteration diverged at step {iteration}: squared distance {dist_sq:e} exceeds {limit:e}")]
    Diverged {
        iteration: usize,
        dist_sq: f64,
        limit: f64,
    },

    #[error("no usable sample points (all on the solution set or empty)")]
    EmptySample,

    #[error("malformed instance: {0}")]
    Instance(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Instance(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
