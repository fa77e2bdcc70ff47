use std::path::PathBuf;

/// Errors produced by the solver library and experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid precision: {0}")]
    InvalidPrecision(String),

    #[error("division by zero in rounded arithmetic")]
    DivisionByZero,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid problem size: {0}")]
    InvalidSize(String),

    #[error("noise level must lie in (0, 1), got {0}")]
    InvalidNoiseLevel(f64),

    #[error("right-hand side is zero")]
    ZeroRightHandSide,

    #[error("singular value decomposition failed: {0}")]
    Svd(String),

    #[error("degenerate Givens rotation (both inputs zero)")]
    DegenerateRotation,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no L-curve corner: {0}")]
    NoCorner(String),

    #[error("stop rule unavailable: {0}")]
    RuleUnavailable(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
