use thiserror::Error;

use crate::complex::PoleHit;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Pole(#[from] PoleHit),

    /// `arctan` evaluated at `±i`.
    #[error("arctan branch point at {0}i")]
    BranchPoint(f64),

    /// `lambda = i`: the map has no fixed points.
    #[error("f_lambda has no fixed points for lambda = i")]
    NoFixedPoints,

    #[error("multiplier lies on the unit circle; declare alpha to choose between parabolic and Siegel")]
    AmbiguousRegime,

    #[error("declared alpha {alpha} does not match the multiplier 2 + lambda^2 (mismatch {mismatch:e})")]
    AlphaMismatch { alpha: f64, mismatch: f64 },

    #[error("Im(lambda) must be positive after normalization, got {0}")]
    NonPositiveImaginary(f64),

    #[error("invalid iteration budget: {0}")]
    InvalidBudget(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// One side of a conjugacy comparison ran into a pole.
    #[error("orbits are incomparable: pole hit at step {step}")]
    Incomparable { step: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("point {re} {im:+}i is outside component {id}")]
    NotInComponent { re: f64, im: f64, id: u32 },

    #[error("point {re} {im:+}i is outside the grid window")]
    OutsideGrid { re: f64, im: f64 },
}
