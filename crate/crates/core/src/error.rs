use alloc::vec::Vec;

/// Errors raised by the control stack.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("time {t} is outside the gain-function domain (horizon {horizon})")]
    GainDomain { t: f64, horizon: f64 },

    #[error("unsafe initialization: h{level}(x0) = {value} is not positive")]
    UnsafeInitialization { level: usize, value: f64 },

    #[error("barrier level {level} out of range 1..={order}")]
    LevelOutOfRange { level: usize, order: usize },

    #[error("arithmetic domain error: {0}")]
    ArithmeticDomain(&'static str),

    #[error("infeasible constraint: |L_g h_n| = {row_norm:e} with slack {zeta}")]
    InfeasibleConstraint { row_norm: f64, zeta: f64 },

    #[error("numerical blow-up at t = {t}: non-finite derivative at state {state:?}")]
    NumericalBlowup { t: f64, state: Vec<f64> },

    #[error("closed-form safety floor requires the linear gain Υ(t) = 1 + t")]
    UnsupportedBound,
}
