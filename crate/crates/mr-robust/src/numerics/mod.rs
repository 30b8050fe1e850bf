//! Numerical building blocks: log-gamma, chi-square distribution functions,
//! Gauss–Legendre quadrature, and symmetric-matrix spectral operations.

mod chi2;
mod gamma;
mod matrix;
mod quadrature;

pub use chi2::{chi2_cdf, chi2_quantile, chi2_sf};
pub use gamma::ln_gamma;
pub use matrix::{sym_inv_sqrt, sym_inverse, SymMatrix};
pub use quadrature::{gauss_legendre, QuadratureRule, MAX_ORDER};
