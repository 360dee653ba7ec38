use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("loss {value} at coordinate {index} outside [{low}, {high}]")]
    LossOutOfRange {
        index: usize,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    QuadratureFailed {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    ProjectionFailed { iterations: usize, residual: f64 },

    #[error("point is not in the hull (residual {residual:e})")]
    NotInHull { residual: f64 },

    #[error("vertex enumeration exceeded cap of {cap}")]
    VertexCapExceeded { cap: usize },

    #[error("learning rate {0} is not a grid point")]
    NotAGridPoint(f64),

    #[error("update factor {0} is not positive")]
    NonPositiveFactor(f64),

    #[error("no action has been played this round")]
    NotPlayed,

    #[error("invalid DAG: {0}")]
    InvalidDag(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
