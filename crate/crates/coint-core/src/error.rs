use thiserror::Error;

/// Errors produced by estimation, testing and inference routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CointError {
    #[error("series too short: need at least {min} observations, got {got}")]
    TooShort { min: usize, got: usize },

    #[error("series length mismatch: x has {x_len} observations, y has {y_len}")]
    LengthMismatch { x_len: usize, y_len: usize },

    #[error("non-finite value in `{field}` at index {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("regressor x has zero variance; OLS system is singular")]
    DegenerateRegressor,

    #[error("residuals are exactly zero; innovation variance would be zero")]
    ZeroResiduals,

    #[error("degenerate residual statistics: e1 = 0")]
    DegenerateStats,

    #[error("all residuals are zero; the sequential filter cannot initialize")]
    AllZeroResiduals,

    #[error("phi = {phi} is invalid for a stationary initial density (need |phi| < 1)")]
    InvalidPhi { phi: f64 },

    #[error("all first differences are zero; random-walk variance is degenerate")]
    ZeroVariance,

    #[error("quadrature did not reach relative tolerance {tol:e} within {max_nodes} nodes")]
    QuadratureNoConvergence { tol: f64, max_nodes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, CointError>;
