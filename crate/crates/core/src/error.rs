use thiserror::Error;

/// Errors produced by the expansion toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("derivative order {requested} exceeds available order {available}")]
    Order { requested: usize, available: usize },

    #[error("summand {summand} lacks moments of order {required} (declared up to {available})")]
    Moments {
        summand: usize,
        required: f64,
        available: f64,
    },

    #[error("quadrature did not converge on [{lo}, {hi}]: successive estimates differ by {diff:e}")]
    Quadrature { lo: f64, hi: f64, diff: f64 },

    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("index {index} out of range for {len} summands")]
    Index { index: usize, len: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
