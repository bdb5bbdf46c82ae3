use thiserror::Error;

use crate::sdp::SdpStatus;

pub type Result<T, E = DccmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DccmError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric dual W is numerically singular (condition number {condition:.3e})")]
    SingularMetric { condition: f64 },

    #[error("metric is not positive definite (smallest eigenvalue {lambda_min:.3e})")]
    NonPositiveMetric { lambda_min: f64 },

    #[error("gram degree too low: monomial {monomial} in entry ({row}, {col}) cannot be matched")]
    DegreeTooLow {
        monomial: String,
        row: usize,
        col: usize,
    },

    #[error("no certificate exists for this template (solver status {status:?})")]
    SynthesisInfeasible { status: SdpStatus },

    #[error("SDP solver failed with status {status:?}: {detail}")]
    SolverFailure { status: SdpStatus, detail: String },

    #[error("invalid SDP problem: {0}")]
    InvalidProblem(String),

    #[error("geodesic solver did not converge after {iterations} iterations")]
    GeodesicMaxIterations { iterations: usize },

    #[error("{path}: {pointer}: {message}")]
    Format {
        path: String,
        pointer: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DccmError {
    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        DccmError::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }
}
