//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the optimizer, channel model and experiment harness.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not match the operation's contract.
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    /// A matrix required to be Hermitian is not, within tolerance.
    #[error("{op}: input is not Hermitian (max asymmetry {asym:.3e})")]
    NotHermitian { op: &'static str, asym: f64 },

    /// A matrix required to be positive (semi)definite is not.
    #[error("{op}: input is not positive definite")]
    NotPositiveDefinite { op: &'static str },

    /// Eigenvalue spread exceeds what the inverse square root can resolve.
    #[error("{op}: matrix is ill-conditioned (min/max eigenvalue ratio {ratio:.3e})")]
    IllConditioned { op: &'static str, ratio: f64 },

    /// Unconstrained water-filling power is unbounded at mu = 0; the caller
    /// must bisect on mu > 0.
    #[error("water-filling power diverges at mu = 0")]
    PowerDiverges,

    /// Dual bisection exhausted its iteration cap without meeting tolerance.
    #[error("bisection failed after {iterations} iterations (power residual {residual:.3e})")]
    BisectionFailed { iterations: usize, residual: f64 },

    /// The monotone-objective guard tripped; this indicates an implementation
    /// bug, not a model property.
    #[error("monotonicity guard violated at iteration {iteration}: {prev} -> {next}")]
    MonotonicityViolated {
        iteration: usize,
        prev: f64,
        next: f64,
    },

    /// Invalid geometry or experiment configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Geometry produced an impossible element placement.
    #[error("invalid geometry: {0}")]
    Geometry(String),

    /// Generic numeric domain violation (negative distance, non-PSD input, ...).
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// File I/O failed while reading configuration or writing results.
    #[error("I/O error on {path}: {detail}")]
    Io { path: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
