use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NhcaError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Cholesky factorization failed at pivot {pivot}; the matrix is not positive definite")]
    CholeskyFailure { pivot: usize },
    #[error("eigen solver failed: {0}")]
    EigenFailure(String),
    #[error("class {0} has no training rows")]
    DegenerateClass(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("regularization pair (nu1={nu1}, nu2={nu2}) makes the transformation matrix singular")]
    SingularOmega { nu1: f64, nu2: f64 },
    #[error("quadratic program did not converge after {iterations} iterations")]
    QpNotConverged { iterations: usize },
    #[error("fit failed for class {class}: {source}")]
    ClassFit {
        class: usize,
        #[source]
        source: Box<NhcaError>,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("label vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("every grid point failed (last error: {0})")]
    AllPointsFailed(String),
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("parse error at row {row}, column {col}: {message}")]
    ParseError {
        row: usize,
        col: usize,
        message: String,
    },
    #[error("missing values in rows {0:?}")]
    MissingValues(Vec<usize>),
    #[error("dataset has a single class")]
    SingleClass,
    #[error("i/o error: {0}")]
    Io(String),
    #[error("model format error: {0}")]
    Format(String),
}

pub type Result<T, E = NhcaError> = std::result::Result<T, E>;

impl From<std::io::Error> for NhcaError {
    fn from(e: std::io::Error) -> Self {
        NhcaError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for NhcaError {
    fn from(e: serde_json::Error) -> Self {
        NhcaError::Format(e.to_string())
    }
}
