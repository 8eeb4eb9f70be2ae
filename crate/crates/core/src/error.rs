use thiserror::Error;

/// Errors produced by the spectral, evolution and oracle routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("potential is not confining: {0}")]
    NotConfining(String),

    #[error("closed-form PMS frequency only applies to kinetic*p^2 + v0 + v2*x^2 + v4*x^4 with v4 > 0: {0}")]
    InvalidModel(String),

    #[error("no stationary point of the trace in [{lower}, {upper}]: slope {slope_lower:e} at lower end, {slope_upper:e} at upper end")]
    NoStationaryPoint {
        lower: f64,
        upper: f64,
        slope_lower: f64,
        slope_upper: f64,
    },

    #[error("eigensolver failed to converge on a {0}x{0} matrix")]
    EigenFailure(usize),

    #[error("numerical check failed: {0}")]
    NumericalCheck(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid resolution insufficient: {0}")]
    Resolution(String),

    #[error(
        "wave function leaks through the grid boundary: |psi| at edge is {ratio:e} of its maximum"
    )]
    BoundaryLeak { ratio: f64 },

    #[error("time step too coarse: halving dt changed <x^2> by {change:e}")]
    StepSize { change: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
