//! Instrument-strength diagnostics reconstructed from summary statistics.
//!
//! The per-instrument first-stage F statistic is F_l = γ̂_l² / Σ̂_γ[l,l]. A
//! single overall first-stage F for the joint regression of exposure on all L
//! instruments can be recovered from those marginal F's and the
//! exposure-study sample size n₂: with ν residual degrees of freedom and
//! S = Σ_l F_l / (F_l + ν),
//!
//! F_overall = (ν / L) · S / (1 − S),
//!
//! which for L = 1 reduces algebraically to F₁ for every ν. The common
//! rough-and-ready approximation is the plain mean of the marginal F's; it is
//! the ν → ∞ limit of the exact formula.

use crate::error::{Error, Result};
use crate::scalar::{fp, lower, Scalar};
use crate::summary::SummaryData;

/// Residual degrees-of-freedom convention for the overall F statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverallFConvention {
    /// ν = n₂ − L + 1 (the default).
    #[default]
    NMinusLPlusOne,
    /// ν = n₂ − L − 1.
    NMinusLMinusOne,
}

/// Per-instrument first-stage F statistics, F_l = γ̂_l² / Σ̂_γ[l,l].
pub fn per_iv_f<T: Scalar>(data: &SummaryData<T>) -> Vec<T> {
    let gamma = data.beta_exposure();
    let cov = data.cov_exposure();
    (0..data.n_instruments())
        .map(|l| {
            let g = gamma[l];
            g * g / cov.get(l, l)
        })
        .collect()
}

/// Mean-of-marginal-F approximation to the overall first-stage F.
pub fn mean_f_approximation<T: Scalar>(data: &SummaryData<T>) -> T {
    let fs = per_iv_f(data);
    let mut sum = T::zero();
    for &f in &fs {
        sum += f;
    }
    sum / fp::<T>(fs.len() as f64)
}

/// Exact overall first-stage F recovered from the marginal F statistics.
///
/// Needs the exposure-study sample size (attach it with
/// [`SummaryData::with_sample_sizes`]). Fails with [`Error::Inconsistent`]
/// when Σ F_l/(F_l+ν) ≥ 1, which no joint R² can produce — the summaries
/// then contradict the claimed sample size.
pub fn overall_f<T: Scalar>(
    data: &SummaryData<T>,
    convention: OverallFConvention,
) -> Result<T> {
    let l = data.n_instruments();
    let n2 = data.n_exposure().ok_or_else(|| {
        Error::Domain(
            "the overall F statistic needs the exposure-study sample size; \
             attach it with with_sample_sizes"
                .into(),
        )
    })?;
    let offset: i64 = match convention {
        OverallFConvention::NMinusLPlusOne => 1,
        OverallFConvention::NMinusLMinusOne => -1,
    };
    let nu = n2 as i64 - l as i64 + offset;
    if nu < 1 {
        return Err(Error::Domain(format!(
            "residual degrees of freedom must be positive, got ν = {nu} \
             (n₂ = {n2}, L = {l})"
        )));
    }
    let nu_t = fp::<T>(nu as f64);
    let mut s = T::zero();
    for f in per_iv_f(data) {
        s += f / (f + nu_t);
    }
    if s >= T::one() {
        return Err(Error::Inconsistent(format!(
            "Σ F/(F+ν) = {} is ≥ 1, which no joint first-stage R² allows; \
             the summary statistics are inconsistent with n₂ = {n2}",
            lower(s)
        )));
    }
    Ok(nu_t / fp::<T>(l as f64) * s / (T::one() - s))
}

/// Bundled strength diagnostics for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthReport<T: Scalar> {
    /// Marginal first-stage F per instrument.
    pub per_iv_f: Vec<T>,
    /// Exact overall F (default ν = n₂ − L + 1); `None` when the
    /// exposure-study sample size is unknown.
    pub overall_f_exact: Option<T>,
    /// Mean-of-marginal-F approximation.
    pub overall_f_mean_approx: T,
    /// The exposure-study sample size the exact overall F used, if any.
    pub n_exposure: Option<usize>,
}

/// Computes the full strength report under the default ν convention.
///
/// The exact overall F is omitted (not an error) when no exposure sample
/// size is attached; an inconsistency between the summaries and an attached
/// sample size still fails loudly.
pub fn instrument_strength<T: Scalar>(data: &SummaryData<T>) -> Result<StrengthReport<T>> {
    let overall_f_exact = match data.n_exposure() {
        Some(_) => Some(overall_f(data, OverallFConvention::default())?),
        None => None,
    };
    Ok(StrengthReport {
        per_iv_f: per_iv_f(data),
        overall_f_exact,
        overall_f_mean_approx: mean_f_approximation(data),
        n_exposure: data.n_exposure(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// γ̂ and exposure SEs chosen so the marginal F's are exactly (9, 16).
    fn two_iv_data(n_exposure: usize) -> SummaryData<f64> {
        SummaryData::from_standard_errors(
            &[3.0_f64, 4.0],
            &[1.0, 1.0],
            &[0.1, 0.1],
            &[1.0, 1.0],
        )
        .unwrap()
        .with_sample_sizes(n_exposure, 10_000)
        .unwrap()
    }

    #[test]
    fn per_iv_f_is_the_squared_z() {
        let data = SummaryData::from_standard_errors(
            &[0.2_f64, -0.3, 0.0],
            &[0.1, 0.1, 0.5],
            &[0.0, 0.0, 0.0],
            &[1.0, 1.0, 1.0],
        )
        .unwrap();
        let fs = per_iv_f(&data);
        assert_relative_eq!(fs[0], 4.0, epsilon = 1e-14);
        assert_relative_eq!(fs[1], 9.0, epsilon = 1e-14);
        assert_relative_eq!(fs[2], 0.0, epsilon = 0.0);
    }

    #[test]
    fn overall_f_matches_the_frozen_reference() {
        // L = 2, marginal F = (9, 16), n₂ = 1000 ⇒ ν = 999.
        let data = two_iv_data(1000);
        let f = overall_f(&data, OverallFConvention::NMinusLPlusOne).unwrap();
        assert_relative_eq!(f, 12.645968811162321, max_relative = 1e-13);
        let report = instrument_strength(&data).unwrap();
        assert_relative_eq!(report.overall_f_exact.unwrap(), f, epsilon = 0.0);
        assert_relative_eq!(report.overall_f_mean_approx, 12.5, epsilon = 1e-12);
        assert_eq!(report.n_exposure, Some(1000));
    }

    #[test]
    fn single_instrument_overall_f_equals_the_marginal_f_exactly() {
        // The L = 1 reduction is an algebraic identity in ν, so it must hold
        // under both conventions and any sample size.
        for n2 in [10usize, 500, 123_456] {
            let data = SummaryData::from_standard_errors(&[0.7_f64], &[0.09], &[0.1], &[0.2])
                .unwrap()
                .with_sample_sizes(n2, 1000)
                .unwrap();
            let f1 = per_iv_f(&data)[0];
            for convention in [
                OverallFConvention::NMinusLPlusOne,
                OverallFConvention::NMinusLMinusOne,
            ] {
                let f = overall_f(&data, convention).unwrap();
                assert_relative_eq!(f, f1, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn zero_effects_give_zero_f() {
        let data = SummaryData::from_standard_errors(
            &[0.0_f64, 0.0],
            &[0.1, 0.2],
            &[0.0, 0.0],
            &[1.0, 1.0],
        )
        .unwrap()
        .with_sample_sizes(1000, 1000)
        .unwrap();
        assert!(per_iv_f(&data).iter().all(|&f| f == 0.0));
        assert_eq!(overall_f(&data, OverallFConvention::default()).unwrap(), 0.0);
        assert_eq!(mean_f_approximation(&data), 0.0);
    }

    #[test]
    fn mean_approximation_is_the_large_sample_limit() {
        let mut previous_gap = f64::INFINITY;
        for n2 in [1_000usize, 10_000, 100_000] {
            let data = two_iv_data(n2);
            let exact = overall_f(&data, OverallFConvention::default()).unwrap();
            let gap = (exact - 12.5).abs();
            assert!(
                gap < previous_gap / 5.0,
                "gap {gap} at n₂ = {n2} did not shrink ~linearly from {previous_gap}"
            );
            previous_gap = gap;
        }
        assert!(previous_gap < 2e-3);
    }

    #[test]
    fn conventions_differ_for_multiple_instruments() {
        let data = two_iv_data(1000);
        let plus = overall_f(&data, OverallFConvention::NMinusLPlusOne).unwrap();
        let minus = overall_f(&data, OverallFConvention::NMinusLMinusOne).unwrap();
        assert!(plus != minus);
        assert!(plus > 0.0 && minus > 0.0);
    }

    #[test]
    fn guards_catch_missing_or_impossible_inputs() {
        // No sample size attached.
        let bare = SummaryData::from_standard_errors(&[3.0_f64, 4.0], &[1.0, 1.0], &[0.1, 0.1], &[1.0, 1.0])
            .unwrap();
        assert!(matches!(
            overall_f(&bare, OverallFConvention::default()),
            Err(Error::Domain(_))
        ));
        let report = instrument_strength(&bare).unwrap();
        assert!(report.overall_f_exact.is_none());
        assert_relative_eq!(report.overall_f_mean_approx, 12.5, epsilon = 1e-12);

        // ν would be nonpositive.
        let tiny = SummaryData::from_standard_errors(
            &[1.0_f64, 1.0, 1.0],
            &[1.0, 1.0, 1.0],
            &[0.0, 0.0, 0.0],
            &[1.0, 1.0, 1.0],
        )
        .unwrap()
        .with_sample_sizes(2, 1000)
        .unwrap();
        assert!(matches!(
            overall_f(&tiny, OverallFConvention::default()),
            Err(Error::Domain(_))
        ));

        // Marginal F's impossibly strong for the claimed n₂.
        let impossible = SummaryData::from_standard_errors(
            &[10.0_f64, 10.0],
            &[1.0, 1.0],
            &[0.0, 0.0],
            &[1.0, 1.0],
        )
        .unwrap()
        .with_sample_sizes(3, 1000)
        .unwrap();
        assert!(matches!(
            overall_f(&impossible, OverallFConvention::default()),
            Err(Error::Inconsistent(_))
        ));
        assert!(instrument_strength(&impossible).is_err());
    }

    #[test]
    fn single_precision_smoke() {
        let data = SummaryData::<f32>::from_standard_errors(
            &[3.0_f32, 4.0],
            &[1.0, 1.0],
            &[0.1, 0.1],
            &[1.0, 1.0],
        )
        .unwrap()
        .with_sample_sizes(1000, 1000)
        .unwrap();
        let f = overall_f(&data, OverallFConvention::default()).unwrap();
        assert_relative_eq!(f, 12.645969_f32, max_relative = 1e-5);
    }
}
