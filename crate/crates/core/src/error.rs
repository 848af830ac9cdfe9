use thiserror::Error;

use crate::expr::EvalError;
use crate::radial::Side;

/// Errors raised by the operators and solvers in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid radial function: {0}")]
    InvalidFunction(String),

    /// A tail series does not converge under the requested weight.
    #[error("divergent {side} tail: term exponent {exponent} under weight {weight}")]
    DivergentTail {
        side: Side,
        exponent: f64,
        weight: f64,
    },

    /// A tail is needed outside the window but the function carries no model for it.
    #[error("{side} tail is not modeled; widen the window")]
    UnmodeledTail { side: Side },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("oracle requires compactly supported input (zero tails)")]
    NonZeroTails,

    #[error("kernel scaling check failed: ratio {ratio} expected {expected}")]
    ScalingViolation { ratio: f64, expected: f64 },

    #[error("no contraction: predicted factor {rho}, last difference {last_diff} after {iterations} iterations")]
    NoContraction {
        rho: f64,
        iterations: usize,
        last_diff: f64,
    },

    #[error("tolerance not reached after {iterations} iterations (last difference {last_diff})")]
    ToleranceNotReached { iterations: usize, last_diff: f64 },

    #[error("continuation failed at shell {shell} (contraction factor {factor})")]
    ContractionFailure { shell: i64, factor: f64 },

    #[error("solution frontier {frontier} is below requested shell {requested}")]
    FrontierTooLow { frontier: i64, requested: i64 },

    #[error("lower cutoff {k_min} too high: truncation bound {bound} exceeds {allowed}")]
    CutoffTooHigh {
        k_min: i64,
        bound: f64,
        allowed: f64,
    },

    #[error("right-hand side has no decay exponent beta")]
    MissingBeta,

    #[error("margin too small: need {required} shells, have {available}")]
    MarginTooSmall { required: i64, available: i64 },

    #[error("right-hand side evaluation failed at shell {shell}, x = {x}: {source}")]
    RhsEvaluation {
        shell: i64,
        x: f64,
        source: EvalError,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
