//! Confidence regions by test inversion, the mrLIML estimator, and
//! invalid-instrument detection.
//!
//! A level-(1−α) confidence region for the causal effect is the set of β₀
//! the chosen test does not reject at level α. Because the tests stay valid
//! under arbitrarily weak instruments, these regions can be unbounded — a
//! ray, the whole line, or a complement of an interval — and with little
//! information they *should* be: an honest region grows as identification
//! fades. The inversion therefore scans β₀ = tan θ over a uniform θ grid,
//! treats the two β₀ → ±∞ limits as virtual grid endpoints, and refines each
//! finite boundary by bisection.

use std::fmt;

use crate::error::{Error, Result};
use crate::hypothesis::{test_from_q, TestKind};
use crate::numerics::{chi2_sf, SymMatrix};
use crate::scalar::{fp, Scalar};
use crate::summary::SummaryData;

pub(crate) mod evaluator;

use evaluator::QEvaluator;

/// Margin (radians) keeping the θ grid off the poles of tan.
const THETA_MARGIN: f64 = 1e-6;
/// Hard cap on bisection steps per boundary.
const MAX_BISECT: usize = 200;
/// Hard cap on golden-section steps in mrLIML.
const MAX_GOLDEN: usize = 200;

/// One maximal connected piece of a confidence region.
///
/// `None` endpoints are infinite (always open); finite endpoints produced by
/// inversion are closed, sitting on the accepting side of the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T: Scalar> {
    /// Lower endpoint; `None` means −∞.
    pub lo: Option<T>,
    /// Upper endpoint; `None` means +∞.
    pub hi: Option<T>,
    /// Whether the lower endpoint belongs to the interval.
    pub lo_closed: bool,
    /// Whether the upper endpoint belongs to the interval.
    pub hi_closed: bool,
}

impl<T: Scalar> Interval<T> {
    /// Whether β lies in this interval.
    pub fn contains(&self, beta: T) -> bool {
        let above = match self.lo {
            None => true,
            Some(lo) => beta > lo || (self.lo_closed && beta == lo),
        };
        let below = match self.hi {
            None => true,
            Some(hi) => beta < hi || (self.hi_closed && beta == hi),
        };
        above && below
    }

    /// Whether both endpoints are finite.
    pub fn is_bounded(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }
}

impl<T: Scalar + fmt::Display> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lo {
            Some(lo) => write!(f, "{}{}", if self.lo_closed { '[' } else { '(' }, lo)?,
            None => write!(f, "(-inf")?,
        }
        write!(f, ", ")?;
        match self.hi {
            Some(hi) => write!(f, "{}{}", hi, if self.hi_closed { ']' } else { ')' }),
            None => write!(f, "inf)"),
        }
    }
}

/// A confidence region: zero or more disjoint intervals in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceRegion<T: Scalar> {
    /// Maximal accepted intervals, left to right.
    pub intervals: Vec<Interval<T>>,
    /// Confidence level 1 − α.
    pub level: T,
    /// The test that was inverted.
    pub test: TestKind,
    /// Number of grid points the scan used.
    pub grid_points: usize,
}

impl<T: Scalar> ConfidenceRegion<T> {
    /// True when no β₀ was accepted.
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// True when every piece has finite endpoints (an empty region counts as
    /// bounded).
    pub fn is_bounded(&self) -> bool {
        self.intervals.iter().all(Interval::is_bounded)
    }

    /// Whether β lies in the region.
    pub fn contains(&self, beta: T) -> bool {
        self.intervals.iter().any(|iv| iv.contains(beta))
    }
}

/// Tuning for region inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions<T: Scalar> {
    /// Number of θ grid points (≥ 3).
    pub grid_points: usize,
    /// Relative tolerance, on the β scale, for boundary bisection.
    pub refine_tol: T,
}

impl<T: Scalar> Default for InversionOptions<T> {
    fn default() -> Self {
        Self {
            grid_points: 4001,
            refine_tol: fp(1e-8),
        }
    }
}

/// Acceptance status of one test at one finite β₀; evaluation errors count
/// as rejections (the caller aggregates them for a warning).
pub(crate) fn accept_at<T: Scalar>(
    kind: TestKind,
    eval: &QEvaluator<T>,
    beta0: T,
    alpha: T,
    errors: &mut usize,
) -> bool {
    let p = match kind {
        // mrAR needs only Q_S, which both evaluator paths serve in O(L).
        TestKind::MrAr => chi2_sf(eval.q_s(beta0), eval.n_instruments()),
        _ => eval
            .q_triple(beta0)
            .and_then(|q| test_from_q(kind, q, beta0, eval.n_instruments()))
            .map(|r| r.p_value),
    };
    match p {
        Ok(p) => p >= alpha,
        Err(_) => {
            *errors += 1;
            false
        }
    }
}

/// Acceptance at the two virtual endpoints β₀ = ∓∞.
///
/// mrAR has an analytic two-sided limit, Q_S → γ̂ᵀ Σ̂_γ⁻¹ γ̂; mrK and mrCLR
/// are assessed at the extreme grid points, whose |β₀| ≈ 10⁶ already sits in
/// the asymptote. Region unboundedness is *defined* by these statuses, so the
/// simulation engine shares this exact function.
pub(crate) fn endpoint_accepts<T: Scalar>(
    kind: TestKind,
    eval: &QEvaluator<T>,
    alpha: T,
    grid_points: usize,
    errors: &mut usize,
) -> (bool, bool) {
    match kind {
        TestKind::MrAr => {
            let accept = match chi2_sf(eval.q_s_limit(), eval.n_instruments()) {
                Ok(p) => p >= alpha,
                Err(_) => {
                    *errors += 1;
                    false
                }
            };
            (accept, accept)
        }
        _ => {
            let thetas = theta_bounds::<T>();
            let n = grid_points.max(2);
            let step = (thetas.1 - thetas.0) / fp::<T>((n - 1) as f64);
            let left = thetas.0.tan();
            let right = (thetas.0 + step * fp::<T>((n - 1) as f64)).tan();
            (
                accept_at(kind, eval, left, alpha, errors),
                accept_at(kind, eval, right, alpha, errors),
            )
        }
    }
}

fn theta_bounds<T: Scalar>() -> (T, T) {
    let margin = fp::<T>(THETA_MARGIN);
    let half_pi = T::pi() * fp::<T>(0.5);
    (-half_pi + margin, half_pi - margin)
}

fn theta_grid<T: Scalar>(n: usize) -> Vec<T> {
    let (lo, hi) = theta_bounds::<T>();
    let step = (hi - lo) / fp::<T>((n - 1) as f64);
    (0..n).map(|i| lo + step * fp::<T>(i as f64)).collect()
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if !alpha.is_finite() || alpha <= T::zero() || alpha >= T::one() {
        return Err(Error::Domain(format!(
            "significance level must lie strictly between 0 and 1, got {}",
            crate::scalar::lower(alpha)
        )));
    }
    Ok(())
}

/// Inverts a test into a level-(1−α) confidence region for the causal effect.
///
/// The scan runs over β₀ = tan θ for a uniform θ grid on
/// (−π/2 + 10⁻⁶, π/2 − 10⁻⁶); the two infinite limits enter as virtual
/// endpoints so unbounded regions are represented honestly. Maximal accepted
/// runs become intervals; each finite boundary is refined by bisection until
/// its β changes by less than `refine_tol` relatively. Grid evaluations that
/// error (for example mrK's degenerate direction) count as rejections and are
/// reported once through `log::warn!`.
pub fn invert_test<T: Scalar>(
    data: &SummaryData<T>,
    kind: TestKind,
    alpha: T,
    options: InversionOptions<T>,
) -> Result<ConfidenceRegion<T>> {
    check_alpha(alpha)?;
    if options.grid_points < 3 {
        return Err(Error::Config(format!(
            "inversion needs at least 3 grid points, got {}",
            options.grid_points
        )));
    }
    if !options.refine_tol.is_finite() || options.refine_tol <= T::zero() {
        return Err(Error::Config("refine_tol must be a positive number".into()));
    }

    let eval = QEvaluator::new(data)?;
    let n = options.grid_points;
    let thetas = theta_grid::<T>(n);
    let mut errors = 0usize;

    let statuses: Vec<bool> = thetas
        .iter()
        .map(|&theta| accept_at(kind, &eval, theta.tan(), alpha, &mut errors))
        .collect();
    let (left_virtual, right_virtual) =
        endpoint_accepts(kind, &eval, alpha, n, &mut errors);

    // Extended status sequence: index -1 is β₀ = −∞, n is β₀ = +∞.
    let status_at = |i: isize| -> bool {
        if i < 0 {
            left_virtual
        } else if i as usize >= n {
            right_virtual
        } else {
            statuses[i as usize]
        }
    };

    // θ for extended indices; the virtual endpoints sit at the tan poles so
    // bisection against them can search the whole remaining wedge.
    let half_pi = T::pi() * fp::<T>(0.5);
    let theta_at = |i: isize| -> T {
        if i < 0 {
            -half_pi
        } else if i as usize >= n {
            half_pi
        } else {
            thetas[i as usize]
        }
    };

    let mut intervals = Vec::new();
    let mut i: isize = -1;
    while i <= n as isize {
        if !status_at(i) {
            i += 1;
            continue;
        }
        let run_start = i;
        while i <= n as isize && status_at(i) {
            i += 1;
        }
        let run_end = i - 1; // inclusive, accepted

        let lo = if run_start <= -1 {
            None
        } else {
            Some(refine_boundary(
                kind,
                &eval,
                alpha,
                theta_at(run_start),
                theta_at(run_start - 1),
                options.refine_tol,
                &mut errors,
            ))
        };
        let hi = if run_end >= n as isize {
            None
        } else {
            Some(refine_boundary(
                kind,
                &eval,
                alpha,
                theta_at(run_end),
                theta_at(run_end + 1),
                options.refine_tol,
                &mut errors,
            ))
        };
        intervals.push(Interval {
            lo_closed: lo.is_some(),
            hi_closed: hi.is_some(),
            lo,
            hi,
        });
    }

    if errors > 0 {
        log::warn!(
            "{kind} inversion: {errors} evaluation(s) failed and were treated as rejections"
        );
    }
    Ok(ConfidenceRegion {
        intervals,
        level: T::one() - alpha,
        test: kind,
        grid_points: n,
    })
}

/// Bisects between an accepting θ and a rejecting θ until the boundary's β
/// is pinned down to `refine_tol` relative precision; returns the β on the
/// accepting side, so closed endpoints genuinely belong to the region.
fn refine_boundary<T: Scalar>(
    kind: TestKind,
    eval: &QEvaluator<T>,
    alpha: T,
    mut theta_accept: T,
    mut theta_reject: T,
    refine_tol: T,
    errors: &mut usize,
) -> T {
    let half = fp::<T>(0.5);
    for _ in 0..MAX_BISECT {
        let beta_accept = theta_accept.tan();
        let beta_reject = theta_reject.tan();
        let spread = (beta_accept - beta_reject).abs();
        if spread <= refine_tol * (T::one() + beta_accept.abs().max(beta_reject.abs())) {
            break;
        }
        let mid = (theta_accept + theta_reject) * half;
        if mid == theta_accept || mid == theta_reject {
            break;
        }
        if accept_at(kind, eval, mid.tan(), alpha, errors) {
            theta_accept = mid;
        } else {
            theta_reject = mid;
        }
    }
    theta_accept.tan()
}

/// Tuning for the mrLIML minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimlOptions<T: Scalar> {
    /// Coarse θ-scan resolution (≥ 3).
    pub coarse_points: usize,
    /// Relative convergence tolerance on the β scale.
    pub tol: T,
}

impl<T: Scalar> Default for LimlOptions<T> {
    fn default() -> Self {
        Self {
            coarse_points: 2001,
            tol: fp(1e-10),
        }
    }
}

/// The mrLIML point estimate: the β₀ minimizing the mrAR statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimlEstimate<T: Scalar> {
    /// argmin of Q_S.
    pub beta: T,
    /// The minimized statistic, min_β Q_S(β).
    pub min_statistic: T,
    /// Whether the bracket shrank below tolerance within the iteration cap.
    pub converged: bool,
}

/// Computes the mrLIML estimator by minimizing Q_S(β₀).
///
/// A coarse scan over the tan-θ grid locates the global basin (ties resolve
/// toward the smaller |β|); golden-section search then contracts the
/// bracketing cell until the β-width falls below `tol · (1 + |β̂|)`.
pub fn mr_liml<T: Scalar>(data: &SummaryData<T>, options: LimlOptions<T>) -> Result<LimlEstimate<T>> {
    if options.coarse_points < 3 {
        return Err(Error::Config(format!(
            "mrLIML coarse scan needs at least 3 points, got {}",
            options.coarse_points
        )));
    }
    if !options.tol.is_finite() || options.tol <= T::zero() {
        return Err(Error::Config("mrLIML tolerance must be a positive number".into()));
    }
    let eval = QEvaluator::new(data)?;
    let thetas = theta_grid::<T>(options.coarse_points);
    let f = |theta: T| eval.q_s(theta.tan());

    let mut best = 0usize;
    let mut best_value = f(thetas[0]);
    for (i, &theta) in thetas.iter().enumerate().skip(1) {
        let value = f(theta);
        let better = value < best_value
            || (value == best_value && theta.tan().abs() < thetas[best].tan().abs());
        if better {
            best = i;
            best_value = value;
        }
    }

    let mut a = thetas[best.saturating_sub(1)];
    let mut b = thetas[(best + 1).min(thetas.len() - 1)];
    let invphi = fp::<T>(0.618_033_988_749_894_9);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut converged = false;
    for _ in 0..MAX_GOLDEN {
        let beta_a = a.tan();
        let beta_b = b.tan();
        if (beta_b - beta_a).abs()
            <= options.tol * (T::one() + beta_a.abs().max(beta_b.abs()))
        {
            converged = true;
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    let theta_hat = (a + b) * fp::<T>(0.5);
    let beta = theta_hat.tan();
    Ok(LimlEstimate {
        beta,
        min_statistic: eval.q_s(beta),
        converged,
    })
}

/// The pleiotropy Q test built on the minimized mrAR statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PleiotropyTest<T: Scalar> {
    /// min_β Q_S(β): residual heterogeneity no single causal effect explains.
    pub statistic: T,
    /// Degrees of freedom, L − 1.
    pub df: usize,
    /// Upper-tail χ²_{L−1} p-value.
    pub p_value: T,
    /// The minimizing β (the mrLIML estimate).
    pub beta_liml: T,
}

/// Tests H₀: all instruments are valid, via min_β Q_S ~ χ²_{L−1}.
///
/// Requires at least two instruments and (numerically) diagonal covariances;
/// the χ²_{L−1} calibration is the independent-instrument one.
pub fn q_pleiotropy<T: Scalar>(
    data: &SummaryData<T>,
    options: LimlOptions<T>,
) -> Result<PleiotropyTest<T>> {
    let l = data.n_instruments();
    if l < 2 {
        return Err(Error::Unsupported(
            "the pleiotropy Q test needs at least 2 instruments (df = L - 1)".into(),
        ));
    }
    require_effectively_diagonal(data)?;
    let liml = mr_liml(data, options)?;
    Ok(PleiotropyTest {
        statistic: liml.min_statistic,
        df: l - 1,
        p_value: chi2_sf(liml.min_statistic, l - 1)?,
        beta_liml: liml.beta,
    })
}

fn require_effectively_diagonal<T: Scalar>(data: &SummaryData<T>) -> Result<()> {
    let tol = fp::<T>(1e-12);
    for m in [data.cov_exposure(), data.cov_outcome()] {
        let scale = diag_max(m);
        if m.max_abs_off_diagonal() > tol * scale {
            return Err(Error::Unsupported(
                "the pleiotropy Q test is calibrated for independent instruments; \
                 covariance matrices must be diagonal"
                    .into(),
            ));
        }
    }
    Ok(())
}

fn diag_max<T: Scalar>(m: &SymMatrix<T>) -> T {
    let mut max = T::zero();
    for i in 0..m.dim() {
        max = max.max(m.get(i, i).abs());
    }
    max
}

/// Joint invalid-instrument screen: the mrAR region (an empty region means no
/// causal effect is compatible with all instruments) and the pleiotropy Q.
#[derive(Debug, Clone, PartialEq)]
pub struct InvalidInstrumentReport<T: Scalar> {
    /// The level-(1−α) mrAR region.
    pub region: ConfidenceRegion<T>,
    /// Whether that region is empty.
    pub region_empty: bool,
    /// The pleiotropy Q test.
    pub pleiotropy: PleiotropyTest<T>,
}

/// Runs both invalid-instrument diagnostics at level α.
pub fn detect_invalid_instruments<T: Scalar>(
    data: &SummaryData<T>,
    alpha: T,
    inversion: InversionOptions<T>,
    liml: LimlOptions<T>,
) -> Result<InvalidInstrumentReport<T>> {
    check_alpha(alpha)?;
    let region = invert_test(data, TestKind::MrAr, alpha, inversion)?;
    let pleiotropy = q_pleiotropy(data, liml)?;
    Ok(InvalidInstrumentReport {
        region_empty: region.is_empty(),
        region,
        pleiotropy,
    })
}
