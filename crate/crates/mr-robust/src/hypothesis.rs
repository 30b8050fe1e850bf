//! The mrAR, mrK, and mrCLR tests of H₀: β = β₀.
//!
//! All three are built from two orthogonalized score vectors. With
//! d(β₀) = Γ̂ − β₀ γ̂ and A(β₀) = Σ̂_Γ + β₀² Σ̂_γ,
//!
//! ```text
//! S(β₀) = A(β₀)^{-1/2} d(β₀)
//! R(β₀) = (β₀² Σ̂_Γ⁻¹ + Σ̂_γ⁻¹)^{-1/2} (β₀ Σ̂_Γ⁻¹ Γ̂ + Σ̂_γ⁻¹ γ̂)
//! ```
//!
//! S carries the evidence against β₀ and is standard normal under the null
//! for *any* instrument strength; R estimates the instrument-signal direction
//! and is independent of S under the null. The quadratic forms
//! Q_S = SᵀS, Q_R = RᵀR, Q_SR = SᵀR yield
//!
//! - **mrAR**: Q_S, null χ²_L — fully robust, power spread over L directions;
//! - **mrK**: Q_SR²/Q_R, null χ²₁ — directional score test;
//! - **mrCLR**: ½(Q_S − Q_R + √((Q_S − Q_R)² + 4 Q_SR²)), with a p-value
//!   computed conditional on the observed Q_R, interpolating between the two.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::numerics::{chi2_sf, gauss_legendre, ln_gamma, sym_inv_sqrt, sym_inverse, SymMatrix};
use crate::scalar::{fp, Scalar};
use crate::summary::SummaryData;

/// Which weak-instrument-robust test to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestKind {
    /// Anderson–Rubin style joint test (χ²_L null).
    MrAr,
    /// Kleibergen style score test (χ²₁ null).
    MrK,
    /// Conditional likelihood-ratio style test (conditional null).
    MrClr,
}

impl TestKind {
    /// All tests, in canonical reporting order.
    pub fn all() -> [TestKind; 3] {
        [TestKind::MrAr, TestKind::MrK, TestKind::MrClr]
    }

    /// Canonical display name.
    pub fn name(self) -> &'static str {
        match self {
            TestKind::MrAr => "mrAR",
            TestKind::MrK => "mrK",
            TestKind::MrClr => "mrCLR",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mrar" => Ok(TestKind::MrAr),
            "mrk" => Ok(TestKind::MrK),
            "mrclr" => Ok(TestKind::MrClr),
            _ => Err(Error::Config(format!(
                "unknown test name '{s}'; expected mrAR, mrK, or mrCLR"
            ))),
        }
    }
}

/// The three quadratic forms every test is assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QTriple<T: Scalar> {
    /// Q_S = S(β₀)ᵀ S(β₀).
    pub q_s: T,
    /// Q_R = R(β₀)ᵀ R(β₀).
    pub q_r: T,
    /// Q_SR = S(β₀)ᵀ R(β₀).
    pub q_sr: T,
}

/// Outcome of one test at one hypothesized β₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult<T: Scalar> {
    /// Which test was run.
    pub kind: TestKind,
    /// The hypothesized causal effect.
    pub beta0: T,
    /// The test statistic.
    pub statistic: T,
    /// Its p-value under the null.
    pub p_value: T,
}

fn check_beta0<T: Scalar>(beta0: T) -> Result<()> {
    if !beta0.is_finite() {
        return Err(Error::Domain(
            "beta0 must be finite; limits at ±infinity are handled by region inversion".into(),
        ));
    }
    Ok(())
}

/// The standardized residual score S(β₀) = A(β₀)^{-1/2} (Γ̂ − β₀ γ̂).
pub fn s_statistic<T: Scalar>(data: &SummaryData<T>, beta0: T) -> Result<DVector<T>> {
    check_beta0(beta0)?;
    let b2 = beta0 * beta0;
    let a = SymMatrix::new(data.cov_outcome().as_matrix() + data.cov_exposure().as_matrix() * b2)?;
    let root = sym_inv_sqrt(&a)?;
    let d = data.beta_outcome() - data.beta_exposure() * beta0;
    Ok(root.as_matrix() * d)
}

/// The standardized instrument-signal score R(β₀).
pub fn r_statistic<T: Scalar>(data: &SummaryData<T>, beta0: T) -> Result<DVector<T>> {
    check_beta0(beta0)?;
    let b2 = beta0 * beta0;
    let inv_outcome = sym_inverse(data.cov_outcome())?;
    let inv_exposure = sym_inverse(data.cov_exposure())?;
    let b = SymMatrix::new(inv_outcome.as_matrix() * b2 + inv_exposure.as_matrix())?;
    let root = sym_inv_sqrt(&b)?;
    let c = inv_outcome.as_matrix() * data.beta_outcome() * beta0
        + inv_exposure.as_matrix() * data.beta_exposure();
    Ok(root.as_matrix() * c)
}

/// Computes (Q_S, Q_R, Q_SR) at β₀.
pub fn q_statistics<T: Scalar>(data: &SummaryData<T>, beta0: T) -> Result<QTriple<T>> {
    let s = s_statistic(data, beta0)?;
    let r = r_statistic(data, beta0)?;
    Ok(QTriple {
        q_s: s.dot(&s),
        q_r: r.dot(&r),
        q_sr: s.dot(&r),
    })
}

/// Builds the named test's result from an already computed Q-triple.
///
/// This is the single place the statistic and p-value formulas live; the
/// per-dataset entry points and the sweep/simulation machinery all call it.
pub fn test_from_q<T: Scalar>(
    kind: TestKind,
    q: QTriple<T>,
    beta0: T,
    l: usize,
) -> Result<TestResult<T>> {
    match kind {
        TestKind::MrAr => Ok(TestResult {
            kind,
            beta0,
            statistic: q.q_s,
            p_value: chi2_sf(q.q_s, l)?,
        }),
        TestKind::MrK => {
            if q.q_r == T::zero() {
                return Err(Error::Degenerate(
                    "mrK is undefined at this beta0: Q_R = 0, so there is no \
                     instrument-signal direction to project on"
                        .into(),
                ));
            }
            let statistic = q.q_sr * q.q_sr / q.q_r;
            Ok(TestResult {
                kind,
                beta0,
                statistic,
                p_value: chi2_sf(statistic, 1)?,
            })
        }
        TestKind::MrClr => {
            let diff = q.q_s - q.q_r;
            let disc = (diff * diff + fp::<T>(4.0) * q.q_sr * q.q_sr).sqrt();
            // Analytically ≥ 0; clamp away a possible -1 ulp from the subtraction.
            let statistic = (fp::<T>(0.5) * (diff + disc)).max(T::zero());
            Ok(TestResult {
                kind,
                beta0,
                statistic,
                p_value: clr_pvalue(statistic, q.q_r, l)?,
            })
        }
    }
}

/// The mrAR test: statistic Q_S, null χ²_L.
pub fn mr_ar<T: Scalar>(data: &SummaryData<T>, beta0: T) -> Result<TestResult<T>> {
    run_test(TestKind::MrAr, data, beta0)
}

/// The mrK test: statistic Q_SR²/Q_R, null χ²₁.
///
/// # Errors
/// [`Error::Degenerate`] when Q_R = 0, where the score direction is undefined.
pub fn mr_k<T: Scalar>(data: &SummaryData<T>, beta0: T) -> Result<TestResult<T>> {
    run_test(TestKind::MrK, data, beta0)
}

/// The mrCLR test: statistic ½(Q_S − Q_R + √((Q_S − Q_R)² + 4 Q_SR²)),
/// p-value conditional on the observed Q_R.
pub fn mr_clr<T: Scalar>(data: &SummaryData<T>, beta0: T) -> Result<TestResult<T>> {
    run_test(TestKind::MrClr, data, beta0)
}

/// Runs the named test.
pub fn run_test<T: Scalar>(kind: TestKind, data: &SummaryData<T>, beta0: T) -> Result<TestResult<T>> {
    let q = q_statistics(data, beta0)?;
    test_from_q(kind, q, beta0, data.n_instruments())
}

/// Quadrature orders tried in turn until two consecutive estimates agree.
const CLR_ORDERS: [usize; 5] = [32, 64, 128, 256, 512];

/// P(T > x | Q_R = q_r) for the mrCLR statistic with L instruments.
///
/// The conditional survival function is
///
/// ```text
/// w(x; q_r) = C(L) ∫₀^{π/2} SF_{χ²_L}( (x + q_r) / (1 + q_r sin²θ / x) ) cos^{L-2}θ dθ
/// C(L) = 2 Γ(L/2) / (√π Γ((L-1)/2))
/// ```
///
/// evaluated by Gauss–Legendre quadrature with the χ² survival function kept
/// inside the integrand, so far-tail p-values retain relative precision.
/// Special cases: L = 1 reduces to SF_{χ²₁}(x); q_r = 0 reduces to
/// SF_{χ²_L}(x); x = 0 returns 1 (the survival function's supremum limit).
pub fn clr_pvalue<T: Scalar>(statistic: T, q_r: T, l: usize) -> Result<T> {
    if l == 0 {
        return Err(Error::Domain("number of instruments must be at least 1".into()));
    }
    if !statistic.is_finite() || statistic < T::zero() {
        return Err(Error::Domain(format!(
            "mrCLR statistic must be finite and non-negative, got {}",
            crate::scalar::lower(statistic)
        )));
    }
    if !q_r.is_finite() || q_r < T::zero() {
        return Err(Error::Domain(format!(
            "Q_R must be finite and non-negative, got {}",
            crate::scalar::lower(q_r)
        )));
    }
    if statistic == T::zero() {
        return Ok(T::one());
    }
    if l == 1 || q_r == T::zero() {
        // L = 1: the statistic collapses to Q_S exactly, independent of Q_R.
        // q_r = 0: the integrand is the constant SF_{χ²_L}(x).
        return chi2_sf(statistic, l);
    }

    let x = statistic;
    let half_pi = T::pi() * fp::<T>(0.5);
    // C(L) via log-gammas to stay finite for large L.
    let half_l = fp::<T>(l as f64 * 0.5);
    let half = fp::<T>(0.5);
    let log_c = fp::<T>(std::f64::consts::LN_2) + ln_gamma(half_l)?
        - half * T::pi().ln()
        - ln_gamma(half_l - half)?;
    let c = log_c.exp();
    let cos_power = (l - 2) as i32;

    // When x ≪ q_r the integrand transitions on the angular scale
    // √(x/q_r) near θ = 0; a single rule over [0, π/2] cannot resolve that
    // boundary layer. Cover it with geometrically growing panels instead —
    // each panel then varies on a scale comparable to its own length.
    let ratio = (x / q_r).sqrt();
    let mut cuts: Vec<T> = vec![T::zero()];
    if ratio < fp::<T>(0.25) {
        let mut t = ratio.asin();
        while t < half_pi * half {
            cuts.push(t);
            t *= fp::<T>(4.0);
        }
    }
    cuts.push(half_pi);

    let mut previous: Option<T> = None;
    for order in CLR_ORDERS {
        let rule = gauss_legendre::<T>(order)?;
        let mut integral = T::zero();
        for panel in cuts.windows(2) {
            let mid = (panel[0] + panel[1]) * half;
            let halfwidth = (panel[1] - panel[0]) * half;
            for (node, weight) in rule.nodes().iter().zip(rule.weights().iter()) {
                let theta = mid + halfwidth * *node;
                let sin = theta.sin();
                let cos = theta.cos();
                let arg = (x + q_r) / (T::one() + q_r * sin * sin / x);
                let sf = chi2_sf(arg, l)?;
                let weight_theta = if cos_power == 0 { T::one() } else { cos.powi(cos_power) };
                integral += *weight * halfwidth * sf * weight_theta;
            }
        }
        let estimate = (c * integral).clamp(T::zero(), T::one());
        if let Some(prev) = previous {
            let tol = fp::<T>(1e-9) * estimate + fp::<T>(1e-15);
            if (estimate - prev).abs() <= tol {
                return Ok(estimate);
            }
        }
        previous = Some(estimate);
    }
    Err(Error::Numerical(format!(
        "mrCLR conditional p-value quadrature did not stabilize by order {}",
        CLR_ORDERS[CLR_ORDERS.len() - 1]
    )))
}
