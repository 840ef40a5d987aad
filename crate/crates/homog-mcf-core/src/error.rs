//! Error type shared by every solver module.

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, CoreError>;

/// Everything that can go wrong in the numerical core.
///
/// Variants split into input/precondition failures (bad arguments, violated
/// invariants, missing certificates) and runtime numerical failures
/// (divergence, iteration limits, stability violations). The CLI maps the
/// two classes to different exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Bad argument or violated precondition.
    InvalidArgument(String),
    /// The coercivity margin `c^2 - (n-1)|Dc|` dipped to or below `delta`.
    CoercivityViolation {
        margin: f64,
        delta: f64,
        /// Worst sample point (first `n` entries meaningful).
        at: [f64; 2],
    },
    /// A step was requested with `dt` beyond the stability limit.
    CflViolation { dt: f64, limit: f64 },
    /// The evolving field left its a priori bounds or produced non-finite values.
    Divergence { time: f64, detail: String },
    /// A monitored quantity exceeded its a priori estimate by a wide margin.
    AprioriViolation { time: f64, quantity: String, value: f64, bound: f64 },
    /// Pseudo-time relaxation did not reach the stopping tolerance.
    IterationLimit { steps: usize, residual: f64 },
    /// Grid too coarse for the requested medium period (`h > eps/16`).
    Resolution { h: f64, eps: f64 },
    /// Gradients left the tabulated range too often.
    Coverage { clamped: u64, total: u64 },
    /// Numerical Hamiltonian dissipation below the measured slope bound.
    MonotonicityViolation { theta: f64, slope: f64, axis: usize },
    /// A table entry violated the effective-value range bound.
    TableValidation { p: [f64; 2], value: f64, lo: f64, hi: f64 },
    /// Exponent fit on unusable data (fewer than 3 points or nonpositive errors).
    DegenerateFit(String),
}

impl CoreError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidArgument(msg.into())
    }

    /// True for failures of the computation itself, as opposed to failures
    /// of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CoreError::CflViolation { .. }
                | CoreError::Divergence { .. }
                | CoreError::AprioriViolation { .. }
                | CoreError::IterationLimit { .. }
                | CoreError::Coverage { .. }
                | CoreError::MonotonicityViolation { .. }
                | CoreError::TableValidation { .. }
        )
    }
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            CoreError::CoercivityViolation { margin, delta, at } => write!(
                f,
                "coercivity violated: margin {margin:.6e} <= delta {delta:.6e} near ({}, {})",
                at[0], at[1]
            ),
            CoreError::CflViolation { dt, limit } => {
                write!(f, "rejected step: dt {dt:.6e} exceeds stability limit {limit:.6e}")
            }
            CoreError::Divergence { time, detail } => {
                write!(f, "solution diverged at t = {time:.6e}: {detail}")
            }
            CoreError::AprioriViolation { time, quantity, value, bound } => write!(
                f,
                "a priori bound violated at t = {time:.6e}: {quantity} = {value:.6e} > {bound:.6e}"
            ),
            CoreError::IterationLimit { steps, residual } => write!(
                f,
                "relaxation did not converge within {steps} steps (residual {residual:.6e})"
            ),
            CoreError::Resolution { h, eps } => {
                write!(f, "grid spacing {h:.6e} does not resolve the fast scale (need h <= {:.6e})", eps / 16.0)
            }
            CoreError::Coverage { clamped, total } => {
                write!(f, "gradient left table coverage in {clamped} of {total} queries")
            }
            CoreError::MonotonicityViolation { theta, slope, axis } => write!(
                f,
                "dissipation theta {theta:.6e} below measured Hamiltonian slope {slope:.6e} on axis {axis}"
            ),
            CoreError::TableValidation { p, value, lo, hi } => write!(
                f,
                "table entry at p = ({}, {}) has value {value:.6e} outside [{lo:.6e}, {hi:.6e}]",
                p[0], p[1]
            ),
            CoreError::DegenerateFit(msg) => write!(f, "degenerate fit: {msg}"),
        }
    }
}

impl core::error::Error for CoreError {}
