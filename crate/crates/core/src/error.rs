use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid velocity parameter varpi = {0} (must be > 0 and != 1)")]
    InvalidVarpi(f64),

    #[error("duplicate velocity in toy set: {0}")]
    DuplicateVelocity(String),

    #[error("invalid toy specification: {0}")]
    InvalidToy(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("compressibility matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("degenerate bracket: {0}")]
    Degenerate(String),

    #[error("chemical potential inversion did not converge after {iterations} iterations (residual {residual:e})")]
    InversionFailed { iterations: usize, residual: f64 },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("mode {0:?} is outside the grid or is the zero mode")]
    InvalidMode([i64; 3]),

    #[error("matrix is not diagonalizable (eigenvector condition {condition:e})")]
    NotDiagonalizable { condition: f64 },

    #[error("quadrature step {step} under-resolves oscillation (limit {limit})")]
    StepTooLarge { step: f64, limit: f64 },

    #[error("positivity validation failed: {0}")]
    Positivity(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("state space of {states} states exceeds cap {cap}")]
    CapExceeded { states: u128, cap: u128 },

    #[error("empty canonical sector")]
    EmptySector,

    #[error("maximizer {theta} lies on the boundary of [0, 1]")]
    BoundaryMaximizer { theta: f64 },

    #[error("singular solve: right-hand side has component {0:e} in the kernel")]
    SingularSolve(f64),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
