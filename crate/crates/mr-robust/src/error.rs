//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the statistical routines.
///
/// Values embedded in variants are lowered to `f64` so the type stays
/// independent of the scalar parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector/matrix dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix required to be symmetric is not, beyond tolerance.
    #[error("matrix not symmetric: max |A - A^T| entry {max_asymmetry:e} exceeds tolerance {tolerance:e}")]
    NotSymmetric { max_asymmetry: f64, tolerance: f64 },

    /// A matrix required to be positive definite has a too-small eigenvalue.
    #[error("matrix not positive definite: eigenvalue {index} is {eigenvalue:e}, below tolerance {tolerance:e}")]
    NotPositiveDefinite {
        index: usize,
        eigenvalue: f64,
        tolerance: f64,
    },

    /// Summary data violated one or more structural invariants.
    #[error("invalid summary data: {}", problems.join("; "))]
    InvalidSummary { problems: Vec<String> },

    /// A statistic is undefined for the given inputs (for example a zero
    /// denominator that no perturbation argument can rescue).
    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    /// The inputs are structurally outside what an operation supports.
    #[error("unsupported input: {0}")]
    Unsupported(String),

    /// The inputs are mutually inconsistent (for example an implied residual
    /// variance that is not positive).
    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    /// A simulation or experiment configuration is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An iterative numerical procedure failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
