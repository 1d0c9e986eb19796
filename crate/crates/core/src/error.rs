use crate::grid::Axis;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two >= 8")]
    NotPowerOfTwo(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid is not symmetric about the origin")]
    AsymmetricGrid,

    #[error("support overflow: mass {mass:.3e} in the boundary zone ({context})")]
    SupportOverflow { mass: f64, context: String },

    #[error("aliasing: momentum boundary mass {mass:.3e} exceeds {threshold:.1e}")]
    Aliasing { mass: f64, threshold: f64 },

    #[error("not normalized: total mass {mass}")]
    NotNormalized { mass: f64 },

    #[error("negative density {value:.3e} at index {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("unit mismatch: {left:?} vs {right:?}")]
    UnitMismatch { left: Axis, right: Axis },

    #[error("grid spacing mismatch: {left} vs {right}")]
    SpacingMismatch { left: f64, right: f64 },

    #[error("probability {0} outside the open interval (0, 1)")]
    InvalidProbability(f64),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("non-finite moment")]
    NonFiniteMoment,

    #[error("result does not fit on the target grid: escaping mass {escaping:.3e}, need at least {required} points")]
    DoesNotFit { escaping: f64, required: usize },

    #[error("phase grid does not cover the distribution: escaping mass {escaping:.3e}")]
    Coverage { escaping: f64 },

    #[error("quadrature truncation {truncated:.3e} above threshold {threshold:.1e}")]
    Truncation { truncated: f64, threshold: f64 },

    #[error("device not covariant-equivalent at tolerance: sup-norm deviation {deviation:.3e} > {tolerance:.1e}")]
    NotCovariantEquivalent { deviation: f64, tolerance: f64 },

    #[error("calibration family is empty at epsilon = {0}")]
    EmptyFamily(f64),

    #[error("invalid epsilon schedule: {0}")]
    InvalidSchedule(String),

    #[error("axis mismatch: expected {expected:?}, got {actual:?}")]
    AxisMismatch { expected: Axis, actual: Axis },

    #[error("missing error estimate")]
    MissingEstimate,

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
