use thiserror::Error;

/// Errors raised by the tensor kernels, the ansatz and the estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("leg {0} appears more than once in the contraction pairs")]
    RepeatedLeg(usize),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("matrix is not an isometry (deviation {0:.3e})")]
    NotIsometric(f64),
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("singular-value decomposition is numerically defective (residual {0:.3e})")]
    DefectiveSvd(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what} needs {qubits} qubits, above the configured guard of {limit}")]
    GuardExceeded {
        what: &'static str,
        qubits: usize,
        limit: usize,
    },
    #[error("move not allowed: {0}")]
    InvalidMove(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_guard(&self) -> bool {
        matches!(self, Error::GuardExceeded { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
