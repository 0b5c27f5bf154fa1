use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Adaptive quadrature ran out of its subdivision budget.
    NonConvergence { intervals: usize, estimate: f64 },
    /// Parameters violate a model invariant.
    InvalidParams(String),
    /// A root was found but its slope is too small to classify.
    DegenerateRoot { eta: f64, slope: f64 },
    /// No bracketing sign change in the search range.
    NoSolution(String),
    /// The integrator step size underflowed. Carries the last accepted state.
    StepFailure { t: f64, step: f64, state: Vec<f64> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonConvergence { intervals, estimate } => write!(
                f,
                "quadrature did not converge after {intervals} intervals (estimate {estimate})"
            ),
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::DegenerateRoot { eta, slope } => {
                write!(f, "degenerate root at eta = {eta} (slope {slope:e})")
            }
            Error::NoSolution(msg) => write!(f, "no solution: {msg}"),
            Error::StepFailure { t, step, .. } => {
                write!(f, "step size underflow at t = {t} (h = {step:e})")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: &str) -> Error {
    Error::InvalidParams(String::from(msg))
}
