use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree overflow: {0} + {1} exceeds 7")]
    DegreeOverflow(usize, usize),
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("degree {0} is not valid for this operation")]
    InvalidDegree(usize),
    #[error("invalid multi-index {0:?}")]
    InvalidMultiIndex(Vec<usize>),
    #[error("expected {expected} coefficients, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("3-form is not positive{}", site_suffix(*.site))]
    NotPositive { site: Option<usize> },
    #[error("grid mismatch between fields")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("time step underflow at t = {0}")]
    DtUnderflow(f64),
    #[error("gauge map Jacobian degenerate at site {0}")]
    DegenerateJacobian(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed data: {0}")]
    Format(String),
}

fn site_suffix(site: Option<usize>) -> String {
    match site {
        Some(s) => format!(" at site {s}"),
        None => String::new(),
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
