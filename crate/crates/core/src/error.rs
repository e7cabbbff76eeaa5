use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("support violation at row {row}: density {value:e} is not positive")]
    SupportViolation { row: usize, value: f64 },

    #[error("column {column} has zero variance")]
    ZeroVariance { column: usize },

    #[error("degenerate projection: w^T x has zero spread over the data")]
    DegenerateProjection,

    #[error("covariate shift produced an empty {0} split")]
    EmptySplit(&'static str),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("no convergence after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("perfect separation: parameter norm reached {0:e}")]
    Separation(f64),

    #[error("fold {fold} contains a single class")]
    SingleClassFold { fold: usize },

    #[error(
        "parameters are not a stationary point of the weighted objective (gradient norm {0:e})"
    )]
    NotStationary(f64),

    #[error("every objective evaluation failed")]
    NoFiniteEvaluation,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io: {0}")]
    Io(String),

    #[error("configuration: {0}")]
    Config(String),
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
