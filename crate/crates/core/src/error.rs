use thiserror::Error;

/// Errors produced by the joint time-vertex toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vertex {0} is isolated; increase the connection radius")]
    IsolatedVertex(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("index {index} out of range for size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-finite value {value} at {location}")]
    NonFinite { location: String, value: f64 },

    #[error("negative power spectral density {value} at ({row}, {col})")]
    NegativePsd { row: usize, col: usize, value: f64 },

    #[error("joint filter output has imaginary residue {residue:e} (tolerance {tolerance:e}); response is not conjugate symmetric in time frequency")]
    ComplexResidue { residue: f64, tolerance: f64 },

    #[error("kernel scale calibration failed: {0}")]
    Calibration(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("{method}: {source}")]
    Method {
        method: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dims(expected: impl std::fmt::Display, got: impl std::fmt::Display) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// True when the failure comes from an iterative solve rather than bad input.
    pub fn is_convergence_failure(&self) -> bool {
        match self {
            Error::NotConverged { .. } | Error::Singular(_) => true,
            Error::Method { source, .. } => source.is_convergence_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
