use thiserror::Error;

/// Every failure mode of the library. The CLI maps these onto exit codes
/// through [`Error::is_validation`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("input vanishes on the grid (min |raw| = {min_norm:e})")]
    DegenerateInput { min_norm: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid semi-axes alpha={alpha}, beta={beta}: need alpha >= beta > 0")]
    InvalidAxes { alpha: f64, beta: f64 },

    #[error("semi-axes too close for the closed form (|alpha-beta| = {gap:e})")]
    DegenerateAxes { gap: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("orbit has zero L2 norm")]
    ZeroOrbit,

    #[error("orbit is near singular (min |X| = {min_norm:e})")]
    NearSingularOrbit { min_norm: f64 },

    #[error("function is not pi-periodic (odd-mode mass {odd_mass:e})")]
    NotPiPeriodic { odd_mass: f64 },

    #[error("mode sum truncated too early: tail bound {tail:e} exceeds {limit:e}")]
    TruncationTooCoarse { tail: f64, limit: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("constraint cannot be satisfied: {0}")]
    ConstraintViolation(String),

    #[error("boundary condition violated: {0}")]
    BoundaryViolation(String),

    #[error("constraint projection is ill conditioned: {0}")]
    ProjectionIllConditioned(String),

    #[error("closure projection failed: {0}")]
    ProjectionFailure(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad parameters or input files rather than
    /// by a numerical procedure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidAxes { .. }
                | Error::DegenerateAxes { .. }
                | Error::DimensionMismatch { .. }
                | Error::DegenerateInput { .. }
                | Error::NotPiPeriodic { .. }
                | Error::BoundaryViolation(_)
                | Error::OutOfRange(_)
                | Error::InvalidInput(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
