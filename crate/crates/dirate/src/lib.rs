//! Directed-information rates of stationary Gaussian vector autoregressions.
//!
//! The crate computes the causally conditioned directed-information rate of a
//! stationary Gaussian VAR process exactly, estimates the same quantity from a
//! finite sample path, and evaluates a non-asymptotic high-probability bound
//! on the estimation error. A Monte Carlo harness ties the three together for
//! scaling experiments.

pub mod bounds;
pub mod estimator;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod prediction;
#[cfg(test)]
pub(crate) mod testmodels;

/// Unified error type for the whole crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A Cholesky pivot came out non-positive. Zero tolerance by design: no
    /// jitter is ever added, so near-singular inputs fail loudly.
    #[error("matrix is not positive definite: pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("model is unstable: companion spectral radius {spectral_radius} is not below 1")]
    Unstable { spectral_radius: f64 },

    #[error("noise covariance is not positive definite; the process would violate the positive spectral floor assumption (assumption 1)")]
    NoiseNotPositiveDefinite,

    #[error("bad partition: {0}")]
    BadPartition(String),

    #[error("{what} did not converge within {limit} steps (last gap {gap:e})")]
    NoConvergence {
        what: &'static str,
        limit: usize,
        gap: f64,
    },

    #[error("spectral density factor is singular at frequency {omega}")]
    SingularAtFrequency { omega: f64 },

    #[error("index {index} out of range for dimension {dim}")]
    BadIndex { index: usize, dim: usize },

    #[error("index {index} appears more than once in a coordinate selection")]
    DuplicateIndex { index: usize },

    #[error("window order p = {p} needs at least p + 1 = {} samples, got {n}", p + 1)]
    WindowTooLong { p: usize, n: usize },

    #[error("degenerate data: coordinate {coord} is constant and only {windows} window(s) are available")]
    DegenerateData { coord: usize, windows: usize },

    #[error("leading block of the empirical window covariance is singular (p = {p}, M = {m} windows); reduce p or provide more data")]
    LeadingBlockSingular { p: usize, m: usize },

    #[error("regressor Gram matrix is singular")]
    GramSingular,

    #[error("partition selects no y coordinates")]
    EmptyY,

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("bad order rule: {0}")]
    BadRule(String),

    #[error("innovation covariance lost rank during the Riccati recursion")]
    InnovationSingular,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
