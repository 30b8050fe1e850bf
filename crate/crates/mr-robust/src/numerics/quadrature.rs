//! Gauss–Legendre quadrature rules on [−1, 1].

use crate::error::{Error, Result};
use crate::scalar::{fp, machine_epsilon, Scalar};

/// Maximum supported rule order.
pub const MAX_ORDER: usize = 1024;

/// Nodes and weights of a quadrature rule on [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T: Scalar> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> QuadratureRule<T> {
    fn new(nodes: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::DimensionMismatch(
                "quadrature nodes and weights must be nonempty and equal length".into(),
            ));
        }
        if !nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Numerical("quadrature nodes not strictly increasing".into()));
        }
        if nodes.iter().any(|&x| x.abs() >= T::one()) {
            return Err(Error::Numerical("quadrature nodes must lie in (-1, 1)".into()));
        }
        if weights.iter().any(|&w| w <= T::zero()) {
            return Err(Error::Numerical("quadrature weights must be positive".into()));
        }
        let sum: T = weights.iter().fold(T::zero(), |acc, &w| acc + w);
        let tol = fp::<T>(1e-12).max(machine_epsilon::<T>() * fp::<T>(8.0 * nodes.len() as f64));
        if (sum - fp::<T>(2.0)).abs() > tol {
            return Err(Error::Numerical(
                "quadrature weights do not sum to the interval length".into(),
            ));
        }
        Ok(Self { nodes, weights })
    }

    /// Nodes in strictly increasing order.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Weights matching [`Self::nodes`] positionally.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Number of points in the rule.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Whether the rule is empty (never true for a constructed rule).
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to `f` on [−1, 1].
    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }
}

/// The `n`-point Gauss–Legendre rule, exact for polynomials of degree ≤ 2n−1.
///
/// Roots of the Legendre polynomial Pₙ by Newton iteration from the Chebyshev
/// initial guess; weights wᵢ = 2 / ((1 − xᵢ²) Pₙ′(xᵢ)²).
///
/// # Errors
/// [`Error::Domain`] unless 1 ≤ n ≤ [`MAX_ORDER`].
pub fn gauss_legendre<T: Scalar>(n: usize) -> Result<QuadratureRule<T>> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::Domain(format!(
            "Gauss-Legendre order must be in 1..={MAX_ORDER}, got {n}"
        )));
    }
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let eps = machine_epsilon::<T>();
    let half_count = n.div_ceil(2);
    for i in 0..half_count {
        let is_center = 2 * i + 1 == n;
        let mut x = if is_center {
            // Odd-order middle root: exactly zero, and the recurrence keeps
            // Pₙ(0) = 0 exactly, so Newton is already converged.
            T::zero()
        } else {
            (T::pi() * fp::<T>(i as f64 + 0.75) / fp::<T>(n as f64 + 0.5)).cos()
        };
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let step = p / d;
            x -= step;
            if step.abs() <= eps * (T::one() + x.abs()) * fp::<T>(4.0) {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = fp::<T>(2.0) / ((T::one() - x * x) * dp * dp);
        // Roots are found in descending order starting near +1.
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        if !is_center {
            nodes[i] = -x;
            weights[i] = w;
        }
    }
    QuadratureRule::new(nodes, weights)
}

/// (Pₙ(x), Pₙ′(x)) by the three-term recurrence.
fn legendre_with_derivative<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p_prev = T::one();
    let mut p = x;
    if n == 1 {
        return (x, T::one());
    }
    for k in 2..=n {
        let kf = fp::<T>(k as f64);
        let next = ((fp::<T>(2.0) * kf - T::one()) * x * p - (kf - T::one()) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    // P'_n(x) = n (x Pₙ − Pₙ₋₁) / (x² − 1); the roots keep |x| < 1.
    let d = fp::<T>(n as f64) * (x * p - p_prev) / (x * x - T::one());
    (p, d)
}
