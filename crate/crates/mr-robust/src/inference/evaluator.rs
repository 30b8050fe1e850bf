//! Fast repeated evaluation of the quadratic forms across many β₀ values.
//!
//! Region inversion and mrLIML sweep thousands of hypothesized values over
//! the same dataset. For diagonal covariances every quantity has an O(L)
//! closed form per point. For general covariances, one simultaneous
//! diagonalization (Σ̂_Γ, Σ̂_γ) up front makes Q_S and Q_R O(L) per point;
//! only Q_SR — which depends on the symmetric square roots themselves — needs
//! per-point O(L³) decompositions.

use nalgebra::DVector;

use crate::error::Result;
use crate::hypothesis::{q_statistics, QTriple};
use crate::numerics::{sym_inv_sqrt, SymMatrix};
use crate::scalar::Scalar;
use crate::summary::SummaryData;

enum Paths<T: Scalar> {
    /// Componentwise closed forms.
    Diagonal {
        gamma: DVector<T>,
        big_gamma: DVector<T>,
        var_exposure: DVector<T>,
        var_outcome: DVector<T>,
    },
    /// Simultaneous-diagonalization coordinates: with G = Σ̂_Γ^{1/2},
    /// K = G⁻¹ Σ̂_γ G⁻¹ = U Λ Uᵀ, w = Uᵀ G⁻¹ Γ̂, v = Uᵀ G⁻¹ γ̂.
    General {
        w: DVector<T>,
        v: DVector<T>,
        lambda: DVector<T>,
        data: SummaryData<T>,
    },
}

/// Precomputed state for sweeping β₀.
pub(crate) struct QEvaluator<T: Scalar> {
    paths: Paths<T>,
    l: usize,
}

impl<T: Scalar> QEvaluator<T> {
    pub fn new(data: &SummaryData<T>) -> Result<Self> {
        let l = data.n_instruments();
        if data.is_diagonal() {
            return Ok(Self {
                paths: Paths::Diagonal {
                    gamma: data.beta_exposure().clone(),
                    big_gamma: data.beta_outcome().clone(),
                    var_exposure: data.cov_exposure().diagonal(),
                    var_outcome: data.cov_outcome().diagonal(),
                },
                l,
            });
        }
        let gi = sym_inv_sqrt(data.cov_outcome())?;
        let k = SymMatrix::new(gi.as_matrix() * data.cov_exposure().as_matrix() * gi.as_matrix())?;
        let (u, lambda) = k.spd_eigen()?;
        let w = u.transpose() * (gi.as_matrix() * data.beta_outcome());
        let v = u.transpose() * (gi.as_matrix() * data.beta_exposure());
        Ok(Self {
            paths: Paths::General {
                w,
                v,
                lambda,
                data: data.clone(),
            },
            l,
        })
    }

    pub fn n_instruments(&self) -> usize {
        self.l
    }

    /// Q_S(β₀) in O(L).
    pub fn q_s(&self, beta0: T) -> T {
        match &self.paths {
            Paths::Diagonal {
                gamma,
                big_gamma,
                var_exposure,
                var_outcome,
            } => {
                let mut acc = T::zero();
                for i in 0..self.l {
                    let d = big_gamma[i] - beta0 * gamma[i];
                    acc += d * d / (var_outcome[i] + beta0 * beta0 * var_exposure[i]);
                }
                acc
            }
            Paths::General { w, v, lambda, .. } => {
                let mut acc = T::zero();
                for i in 0..self.l {
                    let d = w[i] - beta0 * v[i];
                    acc += d * d / (T::one() + beta0 * beta0 * lambda[i]);
                }
                acc
            }
        }
    }

    /// lim Q_S as β₀ → ±∞ (the two one-sided limits coincide): γ̂ᵀ Σ̂_γ⁻¹ γ̂.
    pub fn q_s_limit(&self) -> T {
        match &self.paths {
            Paths::Diagonal {
                gamma, var_exposure, ..
            } => {
                let mut acc = T::zero();
                for i in 0..self.l {
                    acc += gamma[i] * gamma[i] / var_exposure[i];
                }
                acc
            }
            Paths::General { v, lambda, .. } => {
                let mut acc = T::zero();
                for i in 0..self.l {
                    acc += v[i] * v[i] / lambda[i];
                }
                acc
            }
        }
    }

    /// All three quadratic forms at β₀: O(L) for diagonal data, O(L³)
    /// otherwise.
    pub fn q_triple(&self, beta0: T) -> Result<QTriple<T>> {
        match &self.paths {
            Paths::Diagonal {
                gamma,
                big_gamma,
                var_exposure,
                var_outcome,
            } => {
                let mut q_s = T::zero();
                let mut q_r = T::zero();
                let mut q_sr = T::zero();
                for i in 0..self.l {
                    let b2 = beta0 * beta0;
                    let s = (big_gamma[i] - beta0 * gamma[i])
                        / (var_outcome[i] + b2 * var_exposure[i]).sqrt();
                    let r = (beta0 * big_gamma[i] / var_outcome[i] + gamma[i] / var_exposure[i])
                        / (b2 / var_outcome[i] + T::one() / var_exposure[i]).sqrt();
                    q_s += s * s;
                    q_r += r * r;
                    q_sr += s * r;
                }
                Ok(QTriple { q_s, q_r, q_sr })
            }
            Paths::General { data, .. } => q_statistics(data, beta0),
        }
    }
}

// QEvaluator is consumed by inference (region inversion, mrLIML) and by the
// simulation engine; its correctness tests live beside the public entry
// points that exercise both paths against `hypothesis::q_statistics`.
