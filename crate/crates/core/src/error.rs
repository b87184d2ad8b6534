use alloc::string::String;

/// Errors raised by the numerical engines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{name} = {value} is out of domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("matrix size n = {n} is outside the supported range 1..={max}")]
    Size { n: usize, max: usize },
    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },
    #[error("singular linear solve at recursion order k = {k}")]
    Singular { k: usize },
    #[error("λ = {lambda} exceeds the coefficient range λ_max = {lambda_max}")]
    Range { lambda: f64, lambda_max: f64 },
    #[error("internal consistency check failed: {what} (difference {diff:e})")]
    Consistency { what: &'static str, diff: f64 },
    #[error(
        "step size underflow at λ = {at} (h = {step:e}); try a larger starting point or smaller n"
    )]
    StepUnderflow { at: f64, step: f64 },
    #[error(
        "quadrature failed on [{a}, {b}]: estimated error {error:e} after {intervals} subintervals"
    )]
    Quadrature {
        a: f64,
        b: f64,
        error: f64,
        intervals: usize,
    },
    #[error("numerical blow-up on path {path}: |α| = {value:e}; reduce dt")]
    BlowUp { path: u64, value: f64 },
    #[error("insufficient Monte Carlo precision at λ = {lambda}: stderr {stderr:e} exceeds half the envelope {envelope:e}")]
    InsufficientPrecision {
        lambda: f64,
        stderr: f64,
        envelope: f64,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        reason,
    }
}
