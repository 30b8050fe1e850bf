//! Chi-squared distribution functions.

use crate::error::{Error, Result};
use crate::scalar::{fp, lower, machine_epsilon, Scalar};

use super::gamma::{ln_gamma, reg_gamma_p, reg_gamma_q};

fn check_args<T: Scalar>(x: T, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("chi-squared requires k >= 1".into()));
    }
    if !x.is_finite() || x < T::zero() {
        return Err(Error::Domain(format!(
            "chi-squared requires finite x >= 0, got {}",
            lower(x)
        )));
    }
    Ok(())
}

/// CDF of the chi-squared distribution with `k` degrees of freedom,
/// P(k/2, x/2) in terms of the regularized lower incomplete gamma function.
pub fn chi2_cdf<T: Scalar>(x: T, k: usize) -> Result<T> {
    check_args(x, k)?;
    reg_gamma_p(fp::<T>(k as f64 / 2.0), x / fp::<T>(2.0))
}

/// Survival function 1 − CDF, evaluated through the upper incomplete gamma
/// function so the far tail keeps full relative precision.
pub fn chi2_sf<T: Scalar>(x: T, k: usize) -> Result<T> {
    check_args(x, k)?;
    reg_gamma_q(fp::<T>(k as f64 / 2.0), x / fp::<T>(2.0))
}

/// Quantile q with `chi2_cdf(q, k) = p`, for p in (0, 1).
///
/// Bisection on the guaranteed bracket [0, k + 40√k + 40], followed by a few
/// Newton steps on the CDF for the final digits.
pub fn chi2_quantile<T: Scalar>(p: T, k: usize) -> Result<T> {
    if k == 0 {
        return Err(Error::Domain("chi-squared requires k >= 1".into()));
    }
    if !p.is_finite() || p <= T::zero() || p >= T::one() {
        return Err(Error::Domain(format!(
            "quantile requires p in (0, 1), got {}",
            lower(p)
        )));
    }
    let kf = fp::<T>(k as f64);
    let mut lo = T::zero();
    let mut hi = kf + fp::<T>(40.0) * kf.sqrt() + fp::<T>(40.0);
    // The bracket holds for every p the f64 grid can distinguish from 1, but
    // expand defensively rather than assume it.
    while chi2_cdf(hi, k)? < p {
        hi *= fp::<T>(2.0);
    }
    let eps = machine_epsilon::<T>();
    let coarse = fp::<T>(1e-8).max(eps * fp::<T>(64.0));
    while hi - lo > coarse * (T::one() + lo.abs()) {
        let mid = (lo + hi) / fp::<T>(2.0);
        if chi2_cdf(mid, k)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut q = (lo + hi) / fp::<T>(2.0);
    for _ in 0..4 {
        let f = chi2_cdf(q, k)? - p;
        let density = chi2_pdf(q, k);
        if density <= T::zero() {
            break;
        }
        let step = f / density;
        let next = (q - step).clamp(lo, hi);
        if (next - q).abs() <= eps * (T::one() + q.abs()) {
            q = next;
            break;
        }
        q = next;
    }
    Ok(q)
}

fn chi2_pdf<T: Scalar>(x: T, k: usize) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    let a = fp::<T>(k as f64 / 2.0);
    let ln2 = fp::<T>(std::f64::consts::LN_2);
    let lg = ln_gamma(a).expect("a = k/2 > 0");
    ((a - T::one()) * x.ln() - x / fp::<T>(2.0) - a * ln2 - lg).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cdf_trivial_and_closed_forms() {
        for k in [1, 2, 5, 40] {
            assert_eq!(chi2_cdf(0.0, k).unwrap(), 0.0);
        }
        // k = 2 is exponential: CDF = 1 − e^{−x/2}.
        assert_relative_eq!(chi2_cdf(2.0, 2).unwrap(), 0.632_120_558_828_557_7, epsilon = 1e-12);
    }

    #[test]
    fn cdf_derived_reference_values() {
        // 30-digit reference evaluations of the regularized incomplete gamma.
        assert_relative_eq!(chi2_cdf(3.8415, 1).unwrap(), 0.950_001_227_928_777_7, epsilon = 1e-12);
        assert_relative_eq!(chi2_cdf(0.5, 1).unwrap(), 0.520_499_877_813_046_5, epsilon = 1e-12);
        assert_relative_eq!(chi2_cdf(5.0, 3).unwrap(), 0.828_202_855_703_266_9, epsilon = 1e-12);
        assert_relative_eq!(chi2_cdf(1.0, 1).unwrap(), 0.682_689_492_137_085_9, epsilon = 1e-12);
    }

    #[test]
    fn survival_keeps_tail_precision() {
        assert_relative_eq!(chi2_sf(10.0, 2).unwrap(), 6.737_946_999_085_467e-3, max_relative = 1e-12);
        assert_relative_eq!(chi2_sf(9.8, 1).unwrap(), 1.745_118_699_528_904_3e-3, max_relative = 1e-12);
        assert_relative_eq!(chi2_sf(5.0, 1).unwrap(), 2.534_731_867_746_826_4e-2, max_relative = 1e-12);
        // Far tails that a 1 − CDF subtraction could never resolve.
        assert_relative_eq!(chi2_sf(150.0, 3).unwrap(), 2.634_913_928_488_043_6e-32, max_relative = 1e-11);
        assert_relative_eq!(chi2_sf(200.0, 100).unwrap(), 1.178_450_072_097_942_2e-8, max_relative = 1e-11);
    }

    #[test]
    fn quantile_closed_forms_and_references() {
        assert_relative_eq!(chi2_quantile(0.95, 2).unwrap(), 5.991_464_547_107_98, epsilon = 1e-10);
        assert_relative_eq!(chi2_quantile(0.5, 2).unwrap(), 1.386_294_361_119_890_6, epsilon = 1e-10);
        // Bisection-oracle root of CDF(·, 1) = 0.95.
        assert_relative_eq!(chi2_quantile(0.95, 1).unwrap(), 3.841_458_820_694_124_5, epsilon = 1e-10);
        assert_relative_eq!(chi2_quantile(0.95, 20).unwrap(), 31.410_432_844_230_92, epsilon = 1e-9);
        assert_relative_eq!(chi2_quantile(0.05, 1).unwrap(), 3.932_140_000_019_523e-3, max_relative = 1e-9);
    }

    #[test]
    fn quantile_cdf_round_trip() {
        for k in [1usize, 2, 3, 7, 20, 55, 200] {
            for &x in &[0.01, 0.5, 1.0, 4.0, 17.0, 90.0, 200.0] {
                let p = chi2_cdf(x, k).unwrap();
                // Once the CDF saturates toward 1.0 the double carries too few
                // ulps of tail mass to pin x back down; the far upper tail is
                // served by chi2_sf, not by inverting the CDF.
                if p <= 0.0 || p >= 1.0 - 1e-6 {
                    continue;
                }
                let q = chi2_quantile(p, k).unwrap();
                assert_relative_eq!(q, x, epsilon = 1e-8, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn cdf_is_nondecreasing() {
        for k in [1usize, 4, 33] {
            let mut last = 0.0;
            for i in 0..400 {
                let x = 0.5 * i as f64;
                let p = chi2_cdf(x, k).unwrap();
                assert!(p >= last, "cdf decreased at x = {x}, k = {k}");
                last = p;
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(chi2_cdf(-1.0, 3), Err(Error::Domain(_))));
        assert!(matches!(chi2_cdf(1.0, 0), Err(Error::Domain(_))));
        assert!(matches!(chi2_quantile(0.0, 3), Err(Error::Domain(_))));
        assert!(matches!(chi2_quantile(1.0, 3), Err(Error::Domain(_))));
        assert!(matches!(chi2_sf(f64::NAN, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn single_precision_smoke() {
        let p = chi2_cdf(2.0f32, 2).unwrap();
        assert!((p - 0.632_120_6f32).abs() < 1e-6);
        let q = chi2_quantile(0.95f32, 2).unwrap();
        assert!((q - 5.991_464_5f32).abs() < 1e-4);
    }
}
