use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("Newton did not converge at step {step}: residual {residual:e}")]
    SolverDivergence { step: usize, residual: f64 },

    #[error("singular tridiagonal system (pivot {pivot:e} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("conjugate gradient stagnated after {iterations} iterations (relative residual {residual:e})")]
    IllConditioned {
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("local control failed: {reason}")]
    LocalControlFailure { reason: String, history: Vec<f64> },

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("planning failed: {0}")]
    PlanningFailure(String),

    #[error("stair-case step {step} deviates by {deviation:e} > margin {margin:e}; retry with {suggested_steps} steps")]
    StepFailure {
        step: usize,
        deviation: f64,
        margin: f64,
        suggested_steps: usize,
    },

    #[error("tracking failed up to horizon {horizon}: {reason}")]
    TrackingFailure {
        horizon: f64,
        reason: String,
        deviation_history: Vec<(f64, f64)>,
    },

    #[error("terminal error {error:e} exceeds tolerance {tolerance:e}")]
    TerminalMismatch { error: f64, tolerance: f64 },

    #[error("construction failed: {0}")]
    ConstructionFailure(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn dimension(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
