//! Two-sample summary statistics and the known-correlation adjustment.
//!
//! The container holds, per genetic instrument, the IV–exposure association
//! estimates γ̂ with covariance Σ̂_γ (from the exposure study) and the
//! IV–outcome association estimates Γ̂ with covariance Σ̂_Γ (from the outcome
//! study), plus the two studies' sample sizes when known.
//!
//! [`adjust_for_correlation`] maps *marginal*-regression summaries from
//! correlated instruments, together with the instruments' correlation matrix,
//! onto the joint-model scale on which the independent-instrument statistics
//! remain valid.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{sym_inverse, SymMatrix};
use crate::scalar::{fp, lower, Scalar};

/// Tolerance for the unit diagonal of a correlation matrix.
const UNIT_DIAG_TOL: f64 = 1e-12;

/// Per-instrument association summaries from two non-overlapping studies.
///
/// Field naming follows the role of each study: `*_exposure` is the study
/// that regressed the exposure on each instrument (effects γ̂), `*_outcome`
/// the study that regressed the outcome on each instrument (effects Γ̂).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryData<T: Scalar> {
    beta_exposure: DVector<T>,
    beta_outcome: DVector<T>,
    cov_exposure: SymMatrix<T>,
    cov_outcome: SymMatrix<T>,
    n_exposure: Option<usize>,
    n_outcome: Option<usize>,
}

impl<T: Scalar> SummaryData<T> {
    /// Validates and assembles summary data.
    ///
    /// All violations are collected before returning, so one
    /// [`Error::InvalidSummary`] names every problem at once.
    pub fn new(
        beta_exposure: DVector<T>,
        cov_exposure: SymMatrix<T>,
        beta_outcome: DVector<T>,
        cov_outcome: SymMatrix<T>,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        let l = beta_exposure.len();
        if l == 0 {
            problems.push("at least one instrument is required".to_string());
        }
        if beta_outcome.len() != l {
            problems.push(format!(
                "beta_exposure has {} entries but beta_outcome has {}",
                l,
                beta_outcome.len()
            ));
        }
        if cov_exposure.dim() != l {
            problems.push(format!(
                "cov_exposure is {0}x{0} but there are {1} instruments",
                cov_exposure.dim(),
                l
            ));
        }
        if cov_outcome.dim() != l {
            problems.push(format!(
                "cov_outcome is {0}x{0} but there are {1} instruments",
                cov_outcome.dim(),
                l
            ));
        }
        check_finite_vector(&beta_exposure, "beta_exposure", &mut problems);
        check_finite_vector(&beta_outcome, "beta_outcome", &mut problems);
        check_positive_variances(&cov_exposure, "cov_exposure", &mut problems);
        check_positive_variances(&cov_outcome, "cov_outcome", &mut problems);
        if !problems.is_empty() {
            return Err(Error::InvalidSummary { problems });
        }
        Ok(Self {
            beta_exposure,
            beta_outcome,
            cov_exposure,
            cov_outcome,
            n_exposure: None,
            n_outcome: None,
        })
    }

    /// Builds summary data from per-instrument effects and standard errors,
    /// the usual shape of uncorrelated (independent-instrument) summaries.
    /// Covariances become diagonal matrices of squared standard errors.
    pub fn from_standard_errors(
        beta_exposure: &[T],
        se_exposure: &[T],
        beta_outcome: &[T],
        se_outcome: &[T],
    ) -> Result<Self> {
        let mut problems = Vec::new();
        let l = beta_exposure.len();
        for (name, len) in [
            ("se_exposure", se_exposure.len()),
            ("beta_outcome", beta_outcome.len()),
            ("se_outcome", se_outcome.len()),
        ] {
            if len != l {
                problems.push(format!(
                    "beta_exposure has {l} entries but {name} has {len}"
                ));
            }
        }
        for (name, ses) in [("se_exposure", se_exposure), ("se_outcome", se_outcome)] {
            for (i, &se) in ses.iter().enumerate() {
                if !se.is_finite() || se <= T::zero() {
                    problems.push(format!(
                        "{name}[{i}] must be a positive finite standard error, got {}",
                        lower(se)
                    ));
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidSummary { problems });
        }
        let variances = |ses: &[T]| DVector::from_iterator(l, ses.iter().map(|&s| s * s));
        Self::new(
            DVector::from_column_slice(beta_exposure),
            SymMatrix::from_diagonal(&variances(se_exposure))?,
            DVector::from_column_slice(beta_outcome),
            SymMatrix::from_diagonal(&variances(se_outcome))?,
        )
    }

    /// Attaches the two studies' sample sizes (each at least 2).
    pub fn with_sample_sizes(mut self, n_exposure: usize, n_outcome: usize) -> Result<Self> {
        for (name, n) in [("n_exposure", n_exposure), ("n_outcome", n_outcome)] {
            if n < 2 {
                return Err(Error::Domain(format!(
                    "{name} must be at least 2, got {n}"
                )));
            }
        }
        self.n_exposure = Some(n_exposure);
        self.n_outcome = Some(n_outcome);
        Ok(self)
    }

    /// Number of instruments L.
    pub fn n_instruments(&self) -> usize {
        self.beta_exposure.len()
    }

    /// IV–exposure effect estimates γ̂.
    pub fn beta_exposure(&self) -> &DVector<T> {
        &self.beta_exposure
    }

    /// IV–outcome effect estimates Γ̂.
    pub fn beta_outcome(&self) -> &DVector<T> {
        &self.beta_outcome
    }

    /// Covariance Σ̂_γ of the exposure-study estimates.
    pub fn cov_exposure(&self) -> &SymMatrix<T> {
        &self.cov_exposure
    }

    /// Covariance Σ̂_Γ of the outcome-study estimates.
    pub fn cov_outcome(&self) -> &SymMatrix<T> {
        &self.cov_outcome
    }

    /// Exposure-study sample size, when known.
    pub fn n_exposure(&self) -> Option<usize> {
        self.n_exposure
    }

    /// Outcome-study sample size, when known.
    pub fn n_outcome(&self) -> Option<usize> {
        self.n_outcome
    }

    /// True when both covariance matrices are exactly diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.cov_exposure.is_diagonal() && self.cov_outcome.is_diagonal()
    }
}

fn check_finite_vector<T: Scalar>(v: &DVector<T>, name: &str, problems: &mut Vec<String>) {
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() {
            problems.push(format!("{name}[{i}] is not finite"));
        }
    }
}

fn check_positive_variances<T: Scalar>(m: &SymMatrix<T>, name: &str, problems: &mut Vec<String>) {
    for i in 0..m.dim() {
        let d = m.get(i, i);
        if !(d > T::zero()) {
            problems.push(format!(
                "{name} diagonal entry {i} must be a positive variance, got {}",
                lower(d)
            ));
        }
    }
}

/// A validated instrument correlation matrix: symmetric, unit diagonal,
/// entries in [-1, 1], positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSpec<T: Scalar> {
    m: SymMatrix<T>,
}

impl<T: Scalar> CorrelationSpec<T> {
    /// Validates a symmetric matrix as a correlation matrix.
    pub fn new(m: SymMatrix<T>) -> Result<Self> {
        let mut problems = Vec::new();
        let tol = fp::<T>(UNIT_DIAG_TOL);
        let bound = T::one() + tol;
        for i in 0..m.dim() {
            if (m.get(i, i) - T::one()).abs() > tol {
                problems.push(format!(
                    "diagonal entry {i} must be 1, got {}",
                    lower(m.get(i, i))
                ));
            }
            for j in (i + 1)..m.dim() {
                if m.get(i, j).abs() > bound {
                    problems.push(format!(
                        "entry ({i}, {j}) must lie in [-1, 1], got {}",
                        lower(m.get(i, j))
                    ));
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Domain(format!(
                "not a correlation matrix: {}",
                problems.join("; ")
            )));
        }
        // Positive definiteness up front: every adjustment needs it, and the
        // eigenvalue-indexed error is far easier to act on at load time.
        m.spd_eigen()?;
        Ok(Self { m })
    }

    /// The identity correlation (independent instruments).
    pub fn identity(dim: usize) -> Result<Self> {
        Ok(Self {
            m: SymMatrix::identity(dim)?,
        })
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// Borrows the underlying matrix.
    pub fn as_matrix(&self) -> &DMatrix<T> {
        self.m.as_matrix()
    }

    /// Entry at (i, j).
    pub fn get(&self, i: usize, j: usize) -> T {
        self.m.get(i, j)
    }
}

/// Transforms marginal-regression summaries of correlated instruments into
/// joint-model summaries on which the independent-instrument statistics apply.
///
/// Inputs must be marginal summaries — diagonal covariances of per-instrument
/// simple regressions — with both sample sizes attached, each exceeding the
/// instrument count. Per study with effects e, variances σ², sample size n,
/// and instrument correlation M, the map is
///
/// ```text
/// v_i = 1 / (σ²_i n + e_i²),   u = v ∘ e,   H = M ∘ √(v vᵀ),
/// ẽ = H⁻¹ u,                   Σ̃ = (1 − uᵀ H⁻¹ u) / (n − L + 1) · H⁻¹.
/// ```
///
/// With sample correlations for M and maximum-likelihood marginal variances,
/// this reproduces the study's multiple regression of phenotype on all
/// instruments jointly — coefficients and coefficient covariance — without
/// access to individual-level data.
///
/// # Errors
/// [`Error::Unsupported`] for non-diagonal input covariances,
/// [`Error::Domain`] for missing or too-small sample sizes,
/// [`Error::DimensionMismatch`] when a correlation matrix has the wrong size,
/// [`Error::NotPositiveDefinite`] when H is numerically singular, and
/// [`Error::Inconsistent`] when the implied residual variance is not positive.
pub fn adjust_for_correlation<T: Scalar>(
    data: &SummaryData<T>,
    corr_exposure: &CorrelationSpec<T>,
    corr_outcome: &CorrelationSpec<T>,
) -> Result<SummaryData<T>> {
    let l = data.n_instruments();
    for (name, dim) in [
        ("corr_exposure", corr_exposure.dim()),
        ("corr_outcome", corr_outcome.dim()),
    ] {
        if dim != l {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {dim}x{dim} but there are {l} instruments"
            )));
        }
    }
    if !data.is_diagonal() {
        return Err(Error::Unsupported(
            "correlation adjustment expects marginal summaries with diagonal covariance \
             matrices; the input covariances already carry off-diagonal structure"
                .into(),
        ));
    }
    let n_exposure = require_sample_size(data.n_exposure(), "n_exposure", l)?;
    let n_outcome = require_sample_size(data.n_outcome(), "n_outcome", l)?;

    let (beta_exposure, cov_exposure) = adjust_sample(
        data.beta_exposure(),
        &data.cov_exposure().diagonal(),
        n_exposure,
        corr_exposure,
        "exposure",
    )?;
    let (beta_outcome, cov_outcome) = adjust_sample(
        data.beta_outcome(),
        &data.cov_outcome().diagonal(),
        n_outcome,
        corr_outcome,
        "outcome",
    )?;
    SummaryData::new(beta_exposure, cov_exposure, beta_outcome, cov_outcome)?
        .with_sample_sizes(n_exposure, n_outcome)
}

fn require_sample_size(n: Option<usize>, name: &str, l: usize) -> Result<usize> {
    let n = n.ok_or_else(|| {
        Error::Domain(format!(
            "correlation adjustment requires {name}; attach sample sizes with with_sample_sizes"
        ))
    })?;
    if n <= l {
        return Err(Error::Domain(format!(
            "{name} = {n} must exceed the number of instruments L = {l}"
        )));
    }
    Ok(n)
}

/// Applies the adjustment to one study's summaries.
fn adjust_sample<T: Scalar>(
    effect: &DVector<T>,
    variance: &DVector<T>,
    n: usize,
    corr: &CorrelationSpec<T>,
    label: &str,
) -> Result<(DVector<T>, SymMatrix<T>)> {
    let l = effect.len();
    let n_t = fp::<T>(n as f64);

    let v = DVector::from_iterator(
        l,
        effect
            .iter()
            .zip(variance.iter())
            .map(|(&e, &s2)| T::one() / (s2 * n_t + e * e)),
    );
    let u = v.component_mul(effect);
    let sqrt_v = v.map(|x| x.sqrt());

    let mut h = DMatrix::zeros(l, l);
    for i in 0..l {
        for j in i..l {
            let val = corr.get(i, j) * sqrt_v[i] * sqrt_v[j];
            h[(i, j)] = val;
            h[(j, i)] = val;
        }
    }
    let h = SymMatrix::new(h)?;
    let h_inv = sym_inverse(&h)?;

    let adjusted_effect = h_inv.as_matrix() * &u;
    let s = T::one() - u.dot(&adjusted_effect);
    if s <= T::zero() {
        return Err(Error::Inconsistent(format!(
            "the {label}-sample summaries and correlation matrix imply a non-positive \
             residual variance share ({}); they cannot have come from one study",
            lower(s)
        )));
    }
    let scale = s / fp::<T>((n - l + 1) as f64);
    let cov = SymMatrix::new(h_inv.as_matrix() * scale)?;
    Ok((adjusted_effect, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn toy_data() -> SummaryData<f64> {
        SummaryData::from_standard_errors(
            &[0.10, 0.08, 0.12],
            &[0.01, 0.015, 0.02],
            &[0.05, 0.04, 0.06],
            &[0.02, 0.025, 0.03],
        )
        .unwrap()
    }

    #[test]
    fn construction_and_accessors() {
        let d = toy_data();
        assert_eq!(d.n_instruments(), 3);
        assert!(d.is_diagonal());
        assert_eq!(d.n_exposure(), None);
        assert_relative_eq!(d.cov_exposure().get(1, 1), 0.015 * 0.015);
        let d = d.with_sample_sizes(1000, 2000).unwrap();
        assert_eq!(d.n_exposure(), Some(1000));
        assert_eq!(d.n_outcome(), Some(2000));
    }

    #[test]
    fn all_violations_are_collected_at_once() {
        let err = SummaryData::new(
            dvector![0.1, f64::NAN],
            SymMatrix::from_diagonal(&dvector![1.0, -2.0]).unwrap(),
            dvector![0.1, 0.2, 0.3],
            SymMatrix::from_diagonal(&dvector![1.0, 1.0]).unwrap(),
        )
        .unwrap_err();
        match err {
            Error::InvalidSummary { problems } => {
                assert!(problems.len() >= 3, "expected >= 3 problems, got {problems:?}");
                assert!(problems.iter().any(|p| p.contains("beta_outcome has 3")));
                assert!(problems.iter().any(|p| p.contains("beta_exposure[1] is not finite")));
                assert!(problems
                    .iter()
                    .any(|p| p.contains("cov_exposure diagonal entry 1")));
            }
            other => panic!("expected InvalidSummary, got {other:?}"),
        }
    }

    #[test]
    fn standard_error_constructor_rejects_bad_ses() {
        let err = SummaryData::from_standard_errors(
            &[0.1_f64, 0.2],
            &[0.01, 0.0],
            &[0.1, 0.2],
            &[0.01, -0.3],
        )
        .unwrap_err();
        match err {
            Error::InvalidSummary { problems } => {
                assert!(problems.iter().any(|p| p.contains("se_exposure[1]")));
                assert!(problems.iter().any(|p| p.contains("se_outcome[1]")));
            }
            other => panic!("expected InvalidSummary, got {other:?}"),
        }
    }

    #[test]
    fn sample_sizes_must_be_at_least_two() {
        assert!(matches!(
            toy_data().with_sample_sizes(1, 100),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn correlation_spec_validates_shape_entries_and_definiteness() {
        let good = CorrelationSpec::new(
            SymMatrix::new(dmatrix![1.0, 0.3; 0.3, 1.0]).unwrap(),
        );
        assert!(good.is_ok());

        let bad_diag = CorrelationSpec::new(
            SymMatrix::new(dmatrix![1.0, 0.3; 0.3, 0.9]).unwrap(),
        );
        assert!(matches!(bad_diag, Err(Error::Domain(_))));

        let bad_entry = CorrelationSpec::new(
            SymMatrix::new(dmatrix![1.0, 1.2; 1.2, 1.0]).unwrap(),
        );
        assert!(matches!(bad_entry, Err(Error::Domain(_))));

        let singular = CorrelationSpec::new(
            SymMatrix::new(dmatrix![1.0, 1.0; 1.0, 1.0]).unwrap(),
        );
        assert!(matches!(singular, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn single_instrument_adjustment_is_the_identity() {
        let data = SummaryData::from_standard_errors(&[0.37_f64], &[0.042], &[0.19], &[0.031])
            .unwrap()
            .with_sample_sizes(5_000, 8_000)
            .unwrap();
        let id = CorrelationSpec::identity(1).unwrap();
        let adj = adjust_for_correlation(&data, &id, &id).unwrap();
        // H is 1x1 so the map collapses to e ↦ fl(fl(v e) / v): identical up
        // to a rounding step, not bit-exact.
        assert_relative_eq!(adj.beta_exposure()[0], 0.37, max_relative = 1e-14);
        assert_relative_eq!(adj.beta_outcome()[0], 0.19, max_relative = 1e-14);
        assert_relative_eq!(
            adj.cov_exposure().get(0, 0),
            0.042 * 0.042,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            adj.cov_outcome().get(0, 0),
            0.031 * 0.031,
            max_relative = 1e-12
        );
    }

    /// Individual-level oracle: marginal summaries with maximum-likelihood
    /// variances plus the sample correlation matrix must reproduce the
    /// multiple regression of phenotype on all instruments exactly.
    #[test]
    fn adjustment_reproduces_joint_regression() {
        let n = 400_usize;
        let l = 3_usize;
        let mut rng = StdRng::seed_from_u64(20_240_817);

        // Correlated regressors plus a response depending on all of them.
        let mut z = DMatrix::<f64>::zeros(n, l);
        let mut y = DVector::<f64>::zeros(n);
        for i in 0..n {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            let c: f64 = rng.gen_range(-1.0..1.0);
            z[(i, 0)] = a + 0.4 * b;
            z[(i, 1)] = b;
            z[(i, 2)] = 0.5 * a + c;
            y[i] = 0.8 * z[(i, 0)] - 0.3 * z[(i, 1)] + 0.1 * z[(i, 2)] + rng.gen_range(-1.0..1.0);
        }
        // Center columns and response.
        for j in 0..l {
            let mean = z.column(j).sum() / n as f64;
            for i in 0..n {
                z[(i, j)] -= mean;
            }
        }
        let y_mean = y.sum() / n as f64;
        let y = y.map(|v| v - y_mean);

        // Marginal summaries, maximum-likelihood variance convention.
        let yty = y.dot(&y);
        let mut effects = DVector::zeros(l);
        let mut variances = DVector::zeros(l);
        for j in 0..l {
            let zj = z.column(j);
            let zz = zj.dot(&zj);
            let zy = zj.dot(&y);
            effects[j] = zy / zz;
            variances[j] = (yty - zy * zy / zz) / (n as f64 * zz);
        }
        let corr = DMatrix::from_fn(l, l, |i, j| {
            let zi = z.column(i);
            let zj = z.column(j);
            zi.dot(&zj) / (zi.dot(&zi).sqrt() * zj.dot(&zj).sqrt())
        });
        let corr = CorrelationSpec::new(SymMatrix::new(corr).unwrap()).unwrap();

        let data = SummaryData::new(
            effects.clone(),
            SymMatrix::from_diagonal(&variances).unwrap(),
            effects,
            SymMatrix::from_diagonal(&variances).unwrap(),
        )
        .unwrap()
        .with_sample_sizes(n, n)
        .unwrap();
        let adj = adjust_for_correlation(&data, &corr, &corr).unwrap();

        // Direct multiple regression on the same data.
        let ztz = z.transpose() * &z;
        let zty = z.transpose() * &y;
        let ztz_inv = ztz.try_inverse().unwrap();
        let beta_joint = &ztz_inv * &zty;
        let rss = yty - zty.dot(&beta_joint);
        let cov_joint = &ztz_inv * (rss / (n - l + 1) as f64);

        for j in 0..l {
            assert_relative_eq!(adj.beta_exposure()[j], beta_joint[j], max_relative = 1e-10);
            for k in 0..l {
                assert_relative_eq!(
                    adj.cov_exposure().get(j, k),
                    cov_joint[(j, k)],
                    max_relative = 1e-9,
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn adjustment_rejects_structural_misuse() {
        let id2 = CorrelationSpec::identity(2).unwrap();
        let id3 = CorrelationSpec::identity(3).unwrap();

        // Wrong correlation dimension.
        let with_n = toy_data().with_sample_sizes(1000, 1000).unwrap();
        assert!(matches!(
            adjust_for_correlation(&with_n, &id2, &id2),
            Err(Error::DimensionMismatch(_))
        ));

        // Missing sample sizes.
        assert!(matches!(
            adjust_for_correlation(&toy_data(), &id3, &id3),
            Err(Error::Domain(_))
        ));

        // Sample size not exceeding L.
        let tiny = toy_data().with_sample_sizes(3, 1000).unwrap();
        assert!(matches!(
            adjust_for_correlation(&tiny, &id3, &id3),
            Err(Error::Domain(_))
        ));

        // Non-diagonal input covariance.
        let full = SummaryData::new(
            dvector![0.1, 0.2],
            SymMatrix::new(dmatrix![1.0, 0.1; 0.1, 1.0]).unwrap(),
            dvector![0.1, 0.2],
            SymMatrix::from_diagonal(&dvector![1.0, 1.0]).unwrap(),
        )
        .unwrap()
        .with_sample_sizes(100, 100)
        .unwrap();
        assert!(matches!(
            adjust_for_correlation(&full, &id2, &id2),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn impossible_summaries_are_flagged_inconsistent() {
        // Effects so large relative to σ²n that the implied R² exceeds one.
        let data = SummaryData::from_standard_errors(
            &[1.0_f64, 1.0],
            &[0.003, 0.003],
            &[1.0, 1.0],
            &[0.003, 0.003],
        )
        .unwrap()
        .with_sample_sizes(1000, 1000)
        .unwrap();
        let id = CorrelationSpec::identity(2).unwrap();
        match adjust_for_correlation(&data, &id, &id) {
            Err(Error::Inconsistent(msg)) => {
                assert!(msg.contains("exposure"), "message should name the sample: {msg}");
            }
            other => panic!("expected Inconsistent, got {other:?}"),
        }
    }

    #[test]
    fn rank_deficient_correlation_is_rejected_by_construction() {
        let m = dmatrix![1.0, 0.999_999_999_999; 0.999_999_999_999, 1.0];
        // Eigenvalues 2 - 1e-12 and 1e-12: ratio below the definiteness floor.
        assert!(matches!(
            CorrelationSpec::new(SymMatrix::new(m).unwrap()),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn single_precision_smoke() {
        let data = SummaryData::from_standard_errors(
            &[0.1_f32, 0.2],
            &[0.01, 0.02],
            &[0.05, 0.04],
            &[0.02, 0.03],
        )
        .unwrap()
        .with_sample_sizes(10_000, 10_000)
        .unwrap();
        let id = CorrelationSpec::<f32>::identity(2).unwrap();
        let adj = adjust_for_correlation(&data, &id, &id).unwrap();
        assert_relative_eq!(adj.beta_exposure()[0], 0.1_f32, max_relative = 1e-5);
    }
}
