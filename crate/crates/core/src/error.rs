use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("invalid problem: {0}")]
    InvalidSpec(String),

    #[error("index {index} out of range {range} in {func}")]
    Index { func: &'static str, index: usize, range: String },

    #[error("quadrature did not converge: estimated error {estimate:e} exceeds tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("lambda = {re}{im:+}i lies on the branch cut (-inf, 0]")]
    Branch { re: f64, im: f64 },

    #[error("no convergence after {iterations} iterations (last iterate {last_re}{last_im:+}i)")]
    NoConvergence { iterations: usize, last_re: f64, last_im: f64, trace: Vec<(f64, f64)> },

    #[error("integration step size underflow at s = {s:e}")]
    StepUnderflow { s: f64 },

    #[error("integration exceeded {max_steps} steps at s = {s:e}")]
    TooManySteps { max_steps: usize, s: f64 },

    #[error("WKB dominance condition fails up to radius {radius:e}")]
    Dominance { radius: f64 },

    #[error("rank deficient design matrix (condition number {cond:e})")]
    RankDeficient { cond: f64 },

    #[error("reconstruction hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
