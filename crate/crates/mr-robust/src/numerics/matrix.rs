//! Dense symmetric matrices and the spectral operations the statistics need.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{fp, lower, Scalar};

/// Relative symmetry tolerance: entries may differ from their transpose by at
/// most this multiple of the largest entry magnitude.
const SYMMETRY_TOL: f64 = 1e-12;

/// Relative eigenvalue floor below which a matrix is treated as singular.
/// Summary covariances from well-posed studies sit far above it, while a
/// stricter threshold would reject valid post-adjustment matrices.
const PD_TOL_RATIO: f64 = 1e-10;

/// A dense symmetric real matrix of dimension ≥ 1.
///
/// Construction verifies symmetry (within [`SYMMETRY_TOL`] relative to the
/// largest entry) and finiteness, then stores the exactly symmetrized average
/// of the input and its transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T: Scalar> {
    m: DMatrix<T>,
}

impl<T: Scalar> SymMatrix<T> {
    /// Validates and wraps a square matrix.
    ///
    /// # Errors
    /// [`Error::DimensionMismatch`] for non-square or empty input,
    /// [`Error::Domain`] for non-finite entries, and [`Error::NotSymmetric`]
    /// when the asymmetry exceeds tolerance.
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square with dim >= 1, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if let Some((i, j)) = find_non_finite(&m) {
            return Err(Error::Domain(format!("non-finite matrix entry at ({i}, {j})")));
        }
        let max_abs = m.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
        let tol = fp::<T>(SYMMETRY_TOL) * max_abs;
        let mut max_asym = T::zero();
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                max_asym = max_asym.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if max_asym > tol {
            return Err(Error::NotSymmetric {
                max_asymmetry: lower(max_asym),
                tolerance: lower(tol),
            });
        }
        Ok(Self::symmetrize(m))
    }

    /// Wraps a matrix known to be symmetric up to rounding, averaging it with
    /// its transpose. Callers are internal operations whose outputs are
    /// symmetric by construction.
    fn symmetrize(mut m: DMatrix<T>) -> Self {
        let half = fp::<T>(0.5);
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                let avg = (m[(i, j)] + m[(j, i)]) * half;
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Self { m }
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diagonal(diag: &DVector<T>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::DimensionMismatch(
                "symmetric matrix must be square with dim >= 1, got 0x0".into(),
            ));
        }
        Self::new(DMatrix::from_diagonal(diag))
    }

    /// Identity of the given dimension.
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch(
                "symmetric matrix must be square with dim >= 1, got 0x0".into(),
            ));
        }
        Ok(Self {
            m: DMatrix::identity(dim, dim),
        })
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Borrows the underlying dense matrix.
    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.m
    }

    /// Consumes the wrapper, returning the dense matrix.
    pub fn into_matrix(self) -> DMatrix<T> {
        self.m
    }

    /// Entry at (i, j).
    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[(i, j)]
    }

    /// Diagonal as a vector.
    pub fn diagonal(&self) -> DVector<T> {
        self.m.diagonal()
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        self.max_abs_off_diagonal() == T::zero()
    }

    /// Largest magnitude among off-diagonal entries (zero for dim 1).
    pub fn max_abs_off_diagonal(&self) -> T {
        let mut max = T::zero();
        for i in 0..self.dim() {
            for j in (i + 1)..self.dim() {
                max = max.max(self.m[(i, j)].abs());
            }
        }
        max
    }

    /// Eigendecomposition with the positive-definiteness check applied:
    /// returns (eigenvectors, eigenvalues) with every eigenvalue above
    /// [`PD_TOL_RATIO`] times the largest one.
    pub(crate) fn spd_eigen(&self) -> Result<(DMatrix<T>, DVector<T>)> {
        let eig = self.m.clone().symmetric_eigen();
        let max_eig = eig.eigenvalues.iter().fold(T::zero(), |acc, &l| acc.max(l));
        let tol = fp::<T>(PD_TOL_RATIO) * max_eig;
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l <= tol || max_eig <= T::zero() {
                return Err(Error::NotPositiveDefinite {
                    index: i,
                    eigenvalue: lower(l),
                    tolerance: lower(tol),
                });
            }
        }
        Ok((eig.eigenvectors, eig.eigenvalues))
    }

    /// Applies `f` to each eigenvalue and reassembles U f(Λ) Uᵀ.
    fn spectral_map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        let (u, lambda) = self.spd_eigen()?;
        let mapped = DVector::from_iterator(lambda.len(), lambda.iter().map(|&l| f(l)));
        let scaled = &u * DMatrix::from_diagonal(&mapped);
        Ok(Self::symmetrize(scaled * u.transpose()))
    }
}

/// Inverse of a symmetric positive definite matrix.
///
/// # Errors
/// [`Error::NotPositiveDefinite`] naming the offending eigenvalue.
pub fn sym_inverse<T: Scalar>(a: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    a.spectral_map(|l| T::one() / l)
}

/// Inverse symmetric square root B of a symmetric positive definite matrix A,
/// the unique symmetric B with B·A·B = I.
///
/// # Errors
/// [`Error::NotPositiveDefinite`] naming the offending eigenvalue.
pub fn sym_inv_sqrt<T: Scalar>(a: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    a.spectral_map(|l| T::one() / l.sqrt())
}

fn find_non_finite<T: Scalar>(m: &DMatrix<T>) -> Option<(usize, usize)> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Some((i, j));
            }
        }
    }
    None
}
