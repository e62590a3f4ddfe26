use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("invalid interval: t0 = {t0} must be strictly less than t1 = {t1}")]
    InvalidInterval { t0: f64, t1: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("system file field `{field}`: {message}")]
    SystemField {
        field: &'static str,
        message: String,
    },

    #[error("state {xi} lies outside the reachable set [-{x1}, {x1}]")]
    OutOfReachableSet { xi: f64, x1: f64 },

    #[error("simplex iteration limit ({iterations}) exceeded; best feasible value {best_value:?}")]
    SolverFailure {
        iterations: usize,
        best_value: Option<f64>,
    },

    #[error("Assumption 1 violated: {0}")]
    NotNormal(String),

    #[error("degenerate table: {0}")]
    DegenerateTable(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
