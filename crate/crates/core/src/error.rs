use thiserror::Error;

use crate::lattice::Boundary;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("operator power {k} exceeds the configured cap {cap}")]
    CapExceeded { k: usize, cap: usize },

    #[error("{op} is not supported for {boundary:?} boundary")]
    UnsupportedBoundary { op: &'static str, boundary: Boundary },

    #[error("invalid Jacobi window: {0}")]
    InvalidWindow(String),

    #[error("invalid hierarchy polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("commutator is not tridiagonal/symmetric: residual {residual:e} exceeds {tolerance:e}")]
    StructureViolation { residual: f64, tolerance: f64 },

    #[error("flow breakdown at step {step}: a[{site}] = {value:e} is not positive")]
    FlowBreakdown { step: usize, site: usize, value: f64 },

    #[error("transfer matrix left SL(2,C): |det - 1| = {drift:e} at step {step}")]
    Integrity { drift: f64, step: usize },

    #[error("matrix does not have the trace-zero generator shape: {0}")]
    ShapeViolation(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("m-function has a pole at site {site} (u vanishes)")]
    Pole { site: isize },

    #[error("window buffer too small: need {needed} free sites on each side, have {available}")]
    BufferTooSmall { needed: usize, available: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
