//! Weak-instrument-robust inference for two-sample summary-data Mendelian
//! randomization.
//!
//! The crate implements, from per-variant summary statistics alone
//! (IV–exposure effects γ̂ with covariance Σ̂_γ, IV–outcome effects Γ̂ with
//! covariance Σ̂_Γ):
//!
//! - the mrAR, mrK, and mrCLR hypothesis tests, whose size is controlled
//!   regardless of instrument strength ([`hypothesis`]);
//! - confidence regions by test inversion, the mrLIML point estimator, and
//!   pleiotropy detection ([`inference`]);
//! - an adjustment mapping marginal-regression summaries with known
//!   instrument correlation onto the uncorrelated model ([`summary`]);
//! - instrument-strength diagnostics: per-IV and overall first-stage F
//!   statistics reconstructed from summaries ([`diagnostics`]);
//! - a seeded, reproducible Monte Carlo engine for the size/power/invalid/
//!   correlated/stress experiment protocols ([`simulation`]).
//!
//! Everything except the simulation engine is generic over the [`Scalar`]
//! floating-point type; `*64`/`*32` aliases at the crate root pin the common
//! concrete choices.

mod error;
mod scalar;

pub mod diagnostics;
pub mod hypothesis;
pub mod inference;
pub mod numerics;
pub mod simulation;
pub mod summary;

pub use error::{Error, Result};
pub use scalar::Scalar;

// Matrix and vector types in the public API come from nalgebra; the
// re-export lets downstream crates construct them without tracking the
// version themselves.
pub use nalgebra;

/// Double-precision strength report.
pub type StrengthReport64 = diagnostics::StrengthReport<f64>;
/// Single-precision strength report.
pub type StrengthReport32 = diagnostics::StrengthReport<f32>;

/// Double-precision confidence region.
pub type ConfidenceRegion64 = inference::ConfidenceRegion<f64>;
/// Single-precision confidence region.
pub type ConfidenceRegion32 = inference::ConfidenceRegion<f32>;
/// Double-precision mrLIML estimate.
pub type LimlEstimate64 = inference::LimlEstimate<f64>;
/// Single-precision mrLIML estimate.
pub type LimlEstimate32 = inference::LimlEstimate<f32>;

/// Double-precision summary data.
pub type SummaryData64 = summary::SummaryData<f64>;
/// Single-precision summary data.
pub type SummaryData32 = summary::SummaryData<f32>;
/// Double-precision correlation specification.
pub type CorrelationSpec64 = summary::CorrelationSpec<f64>;
/// Single-precision correlation specification.
pub type CorrelationSpec32 = summary::CorrelationSpec<f32>;
/// Double-precision symmetric matrix.
pub type SymMatrix64 = numerics::SymMatrix<f64>;
/// Single-precision symmetric matrix.
pub type SymMatrix32 = numerics::SymMatrix<f32>;
/// Double-precision test result.
pub type TestResult64 = hypothesis::TestResult<f64>;
/// Single-precision test result.
pub type TestResult32 = hypothesis::TestResult<f32>;
/// Double-precision quadratic-form triple.
pub type QTriple64 = hypothesis::QTriple<f64>;
/// Single-precision quadratic-form triple.
pub type QTriple32 = hypothesis::QTriple<f32>;
