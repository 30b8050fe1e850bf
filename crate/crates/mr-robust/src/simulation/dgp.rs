//! Data-generating processes for the Monte Carlo experiments.
//!
//! Two independent samples are drawn from the structural model
//!
//! Y_i = D_i β + Z_iᵀ α + ε_i,   D_i = Z_iᵀ γ* + δ_i,
//!
//! with ε = ρδ + √(1−ρ²)e for independent standard-normal δ and e, so ρ is
//! the endogeneity between exposure and outcome. Instruments are genotypes
//! Z_j ∈ {0, 1, 2} ~ Binom(2, p_j) with p_j uniform on a configured range,
//! drawn independently or — when a correlation bandwidth is set — through a
//! Gaussian copula with banded latent correlation thresholded at the
//! Binomial quantiles.
//!
//! The strength index r sets the instrument signal: each standardized-scale
//! effect is drawn uniformly on [√((r−0.5)/n), √((r+0.5)/n)], and the raw
//! structural coefficient is γ*_j = γ_j / sd(Z_j) with the population
//! genotype standard deviation sd(Z_j) = √(2p_j(1−p_j)). That normalization
//! makes the per-instrument concentration — and hence the expected marginal
//! first-stage F statistic — approximately r, which is what the strength
//! index is meant to mean.
//!
//! Summary statistics are computed exactly as a practitioner would: a
//! per-instrument marginal OLS regression on centered data in each sample,
//! keeping slope and residual-based standard error. Intercepts are fixed at
//! zero throughout.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::SymMatrix;
use crate::summary::{CorrelationSpec, SummaryData};

use super::rng::{inverse_normal_cdf, SimRng};

/// Configuration of the data-generating process.
///
/// Fields are public; every entry point validates with [`DgpConfig::validate`]
/// before drawing anything.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig {
    /// Outcome-study sample size n₁.
    pub n_outcome: usize,
    /// Exposure-study sample size n₂.
    pub n_exposure: usize,
    /// Number of instruments L.
    pub n_instruments: usize,
    /// Causal effect β.
    pub beta: f64,
    /// Endogeneity correlation ρ between the structural errors.
    pub rho_endogeneity: f64,
    /// Strength index r (≥ 0.5); roughly the expected per-instrument
    /// first-stage F statistic.
    pub r: f64,
    /// Direct (pleiotropic) effects α per instrument; empty means all zero.
    pub alpha_direct: Vec<f64>,
    /// Range for the allele frequencies p_j, strictly inside (0, 1).
    pub allele_freq_range: (f64, f64),
    /// Latent-correlation bandwidth; 0 generates independent instruments.
    pub corr_bandwidth: usize,
    /// Latent correlation within the band.
    pub corr_rho: f64,
    /// Master seed; replicate streams derive from it.
    pub seed: u64,
}

impl Default for DgpConfig {
    /// Desk-scale defaults: n₁ = n₂ = 20000, L = 20, β = 0, ρ = 0.1,
    /// r = 16, valid independent instruments, seed 0.
    fn default() -> Self {
        Self {
            n_outcome: 20_000,
            n_exposure: 20_000,
            n_instruments: 20,
            beta: 0.0,
            rho_endogeneity: 0.1,
            r: 16.0,
            alpha_direct: Vec::new(),
            allele_freq_range: (0.1, 0.9),
            corr_bandwidth: 0,
            corr_rho: 0.0,
            seed: 0,
        }
    }
}

impl DgpConfig {
    /// Checks every invariant, including positive definiteness of the banded
    /// latent correlation when a bandwidth is configured.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_outcome < 3 || self.n_exposure < 3 {
            problems.push(format!(
                "sample sizes must be at least 3 for marginal regressions, got n₁ = {}, n₂ = {}",
                self.n_outcome, self.n_exposure
            ));
        }
        if self.n_instruments == 0 {
            problems.push("at least one instrument is required".into());
        }
        if !self.beta.is_finite() {
            problems.push(format!("beta must be finite, got {}", self.beta));
        }
        if !(self.rho_endogeneity > -1.0 && self.rho_endogeneity < 1.0) {
            problems.push(format!(
                "rho_endogeneity must lie strictly inside (-1, 1), got {}",
                self.rho_endogeneity
            ));
        }
        if !self.r.is_finite() || self.r < 0.5 {
            problems.push(format!(
                "the strength index r must be at least 0.5 (the lower endpoint \
                 √((r−0.5)/n) is imaginary otherwise), got {}",
                self.r
            ));
        }
        if !self.alpha_direct.is_empty() && self.alpha_direct.len() != self.n_instruments {
            problems.push(format!(
                "alpha_direct has {} entries for {} instruments (leave it empty for all-zero)",
                self.alpha_direct.len(),
                self.n_instruments
            ));
        }
        if self.alpha_direct.iter().any(|a| !a.is_finite()) {
            problems.push("alpha_direct entries must be finite".into());
        }
        let (lo, hi) = self.allele_freq_range;
        if !(lo > 0.0 && hi < 1.0 && lo < hi) {
            problems.push(format!(
                "allele_freq_range must be ordered and strictly inside (0, 1), got ({lo}, {hi})"
            ));
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        if self.corr_bandwidth > 0 {
            banded_correlation(self.n_instruments, self.corr_bandwidth, self.corr_rho)?;
        }
        Ok(())
    }
}

/// Builds the banded latent correlation matrix: 1 on the diagonal, `rho`
/// where 1 ≤ |i−j| ≤ `bandwidth`, 0 beyond. Fails with a configuration
/// error when the result is not positive definite.
pub fn banded_correlation(l: usize, bandwidth: usize, rho: f64) -> Result<SymMatrix<f64>> {
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(Error::Config(format!(
            "the banded correlation entry must lie strictly inside (-1, 1), got {rho}"
        )));
    }
    let m = DMatrix::from_fn(l, l, |i, j| {
        let gap = i.abs_diff(j);
        if gap == 0 {
            1.0
        } else if gap <= bandwidth {
            rho
        } else {
            0.0
        }
    });
    let sym = SymMatrix::new(m)?;
    CorrelationSpec::new(sym.clone()).map_err(|_| {
        Error::Config(format!(
            "the banded correlation (L = {l}, bandwidth = {bandwidth}, rho = {rho}) \
             is not positive definite"
        ))
    })?;
    Ok(sym)
}

/// Draws the L standardized-scale instrument effects, each uniform on
/// [√((r−0.5)/n), √((r+0.5)/n)].
pub fn draw_gamma_vector(r: f64, n: usize, l: usize, rng: &mut SimRng) -> Result<Vec<f64>> {
    if !r.is_finite() || r < 0.5 {
        return Err(Error::Domain(format!(
            "the strength index r must be at least 0.5, got {r}"
        )));
    }
    if n == 0 || l == 0 {
        return Err(Error::Domain(
            "sample size and instrument count must be positive".into(),
        ));
    }
    let lo = ((r - 0.5) / n as f64).sqrt();
    let hi = ((r + 0.5) / n as f64).sqrt();
    Ok((0..l).map(|_| rng.uniform_in(lo, hi)).collect())
}

/// Centered simple-regression slope of y on z with its residual-based
/// standard error (n − 2 degrees of freedom).
pub fn marginal_ols(y: &[f64], z: &[f64]) -> Result<(f64, f64)> {
    if y.len() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "y has {} observations but z has {}",
            y.len(),
            z.len()
        )));
    }
    let n = y.len();
    if n < 3 {
        return Err(Error::Domain(format!(
            "marginal regression needs at least 3 observations, got {n}"
        )));
    }
    let nf = n as f64;
    let y_bar = y.iter().sum::<f64>() / nf;
    let z_bar = z.iter().sum::<f64>() / nf;
    let mut szz = 0.0;
    let mut szy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dz = z[i] - z_bar;
        let dy = y[i] - y_bar;
        szz += dz * dz;
        szy += dz * dy;
        syy += dy * dy;
    }
    if szz == 0.0 {
        return Err(Error::Degenerate(
            "the instrument column is constant; its marginal regression is undefined".into(),
        ));
    }
    let slope = szy / szz;
    let rss = (syy - szy * szy / szz).max(0.0);
    let se = (rss / ((nf - 2.0) * szz)).sqrt();
    Ok((slope, se))
}

/// One study's individual-level data, kept alongside the summaries so
/// exact-identity oracles and empirical-correlation adjustments can use it.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualSample {
    /// Genotypes, row-major: entry (i, j) at `genotypes[i * l + j]`.
    pub genotypes: Vec<u8>,
    /// The regressand of this study's marginal regressions (Y for the
    /// outcome study, D for the exposure study).
    pub phenotype: Vec<f64>,
    /// Number of individuals.
    pub n: usize,
    /// Number of instruments.
    pub l: usize,
}

impl IndividualSample {
    /// The genotype matrix as floats (n × L).
    pub fn z_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.l, |i, j| self.genotypes[i * self.l + j] as f64)
    }

    /// One genotype column as floats.
    pub fn z_column(&self, j: usize) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.genotypes[i * self.l + j] as f64)
            .collect()
    }

    /// Sample correlation matrix of the genotype columns, as a validated
    /// correlation specification (fails if a column is constant or the
    /// matrix is numerically rank deficient).
    pub fn empirical_correlation(&self) -> Result<CorrelationSpec<f64>> {
        let l = self.l;
        let nf = self.n as f64;
        let mut means = vec![0.0; l];
        for i in 0..self.n {
            for j in 0..l {
                means[j] += self.genotypes[i * l + j] as f64;
            }
        }
        for m in &mut means {
            *m /= nf;
        }
        let mut cross: DMatrix<f64> = DMatrix::zeros(l, l);
        for i in 0..self.n {
            for j in 0..l {
                let dj = self.genotypes[i * l + j] as f64 - means[j];
                for k in j..l {
                    let dk = self.genotypes[i * l + k] as f64 - means[k];
                    cross[(j, k)] += dj * dk;
                }
            }
        }
        let corr = DMatrix::from_fn(l, l, |j, k| {
            let (a, b) = if j <= k { (j, k) } else { (k, j) };
            cross[(a, b)] / (cross[(a, a)] * cross[(b, b)]).sqrt()
        });
        CorrelationSpec::new(SymMatrix::new(corr)?)
    }
}

/// A generated two-sample dataset: the summary statistics the tests consume
/// plus the individual-level data they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Marginal-regression summaries (diagonal covariances, sample sizes
    /// attached).
    pub summary: SummaryData<f64>,
    /// Outcome study: genotypes and Y.
    pub outcome_sample: IndividualSample,
    /// Exposure study: genotypes and D.
    pub exposure_sample: IndividualSample,
}

/// Generates one dataset on the configuration's base stream (stream 0).
pub fn generate_dataset(config: &DgpConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = SimRng::base(config.seed);
    generate_dataset_with(config, &mut rng)
}

/// Generates one dataset from an externally positioned stream (the engine
/// hands each replicate its own stream).
///
/// Draw order is fixed and documented so sequences are reproducible:
/// allele frequencies p (L draws), standardized effects γ (L draws), then
/// the outcome sample — genotypes individual-by-individual (L latent draws
/// each), δ (n₁), e (n₁) — then the exposure sample — genotypes, δ (n₂).
/// The exposure study's ε is never formed because its outcome is unobserved.
pub fn generate_dataset_with(config: &DgpConfig, rng: &mut SimRng) -> Result<Dataset> {
    config.validate()?;
    let l = config.n_instruments;
    let (p_lo, p_hi) = config.allele_freq_range;
    let p: Vec<f64> = (0..l).map(|_| rng.uniform_in(p_lo, p_hi)).collect();
    let gamma = draw_gamma_vector(config.r, config.n_outcome, l, rng)?;
    // Raw-scale structural coefficients: standardized effect over the
    // population genotype standard deviation.
    let gamma_raw: Vec<f64> = gamma
        .iter()
        .zip(&p)
        .map(|(&g, &pj)| g / (2.0 * pj * (1.0 - pj)).sqrt())
        .collect();

    let genotype_sampler = GenotypeSampler::new(config, &p)?;

    // Outcome study.
    let n1 = config.n_outcome;
    let z1 = genotype_sampler.draw_sample(n1, rng);
    let mut y1 = vec![0.0; n1];
    let rho = config.rho_endogeneity;
    let noise_scale = (1.0 - rho * rho).sqrt();
    let alpha = &config.alpha_direct;
    for i in 0..n1 {
        let mut zg = 0.0;
        let mut za = 0.0;
        for j in 0..l {
            let zij = z1[i * l + j] as f64;
            zg += zij * gamma_raw[j];
            if !alpha.is_empty() {
                za += zij * alpha[j];
            }
        }
        let delta = rng.normal();
        let e = rng.normal();
        let d = zg + delta;
        y1[i] = d * config.beta + za + rho * delta + noise_scale * e;
    }
    // The δ and e loops are interleaved per individual above; keep that in
    // sync with the documented draw order: for each i, δ_i then e_i.

    // Exposure study.
    let n2 = config.n_exposure;
    let z2 = genotype_sampler.draw_sample(n2, rng);
    let mut d2 = vec![0.0; n2];
    for i in 0..n2 {
        let mut zg = 0.0;
        for j in 0..l {
            zg += z2[i * l + j] as f64 * gamma_raw[j];
        }
        d2[i] = zg + rng.normal();
    }

    let outcome_sample = IndividualSample {
        genotypes: z1,
        phenotype: y1,
        n: n1,
        l,
    };
    let exposure_sample = IndividualSample {
        genotypes: z2,
        phenotype: d2,
        n: n2,
        l,
    };

    let mut gamma_hat = Vec::with_capacity(l);
    let mut se_gamma = Vec::with_capacity(l);
    let mut big_gamma_hat = Vec::with_capacity(l);
    let mut se_big_gamma = Vec::with_capacity(l);
    for j in 0..l {
        let (slope_o, se_o) = marginal_ols(&outcome_sample.phenotype, &outcome_sample.z_column(j))?;
        big_gamma_hat.push(slope_o);
        se_big_gamma.push(se_o);
        let (slope_e, se_e) =
            marginal_ols(&exposure_sample.phenotype, &exposure_sample.z_column(j))?;
        gamma_hat.push(slope_e);
        se_gamma.push(se_e);
    }
    let summary =
        SummaryData::from_standard_errors(&gamma_hat, &se_gamma, &big_gamma_hat, &se_big_gamma)?
            .with_sample_sizes(n2, n1)?;

    Ok(Dataset {
        summary,
        outcome_sample,
        exposure_sample,
    })
}

/// Replaces the summary estimates with fresh draws around attenuated means:
/// γ̂_j ← N(K·γ̂_j, Σ̂_γ,jj) and Γ̂_j ← N(K·γ̂_j·β_true, Σ̂_Γ,jj), with the
/// covariance matrices and sample sizes kept as they are.
///
/// K = 1 keeps each instrument's strength; K = 0 removes all signal while
/// the reported precisions still claim strong instruments — the stress case
/// for weak-instrument robustness. Because the transformed estimates are
/// exactly normal around means consistent with β_true, a nominal-level test
/// of β = β_true keeps exact size at every K.
///
/// All γ̂ draws happen before all Γ̂ draws, in instrument order, so streams
/// are reproducible. Requires diagonal covariances (the per-coordinate draw
/// would misstate a correlated sampling distribution).
pub fn stress_transform(
    data: &SummaryData<f64>,
    k: f64,
    beta_true: f64,
    rng: &mut SimRng,
) -> Result<SummaryData<f64>> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::Domain(format!(
            "the attenuation factor K must lie in [0, 1], got {k}"
        )));
    }
    if !beta_true.is_finite() {
        return Err(Error::Domain(format!(
            "beta_true must be finite, got {beta_true}"
        )));
    }
    if !data.is_diagonal() {
        return Err(Error::Unsupported(
            "the stress transform draws estimates coordinate-wise and needs \
             diagonal covariance matrices"
            .into(),
        ));
    }
    let l = data.n_instruments();
    let gamma_hat = data.beta_exposure();
    let mut new_exposure = DVector::zeros(l);
    for j in 0..l {
        let sd = data.cov_exposure().get(j, j).sqrt();
        new_exposure[j] = k * gamma_hat[j] + sd * rng.normal();
    }
    let mut new_outcome = DVector::zeros(l);
    for j in 0..l {
        let sd = data.cov_outcome().get(j, j).sqrt();
        new_outcome[j] = k * gamma_hat[j] * beta_true + sd * rng.normal();
    }
    let transformed = SummaryData::new(
        new_exposure,
        data.cov_exposure().clone(),
        new_outcome,
        data.cov_outcome().clone(),
    )?;
    match (data.n_exposure(), data.n_outcome()) {
        (Some(n2), Some(n1)) => transformed.with_sample_sizes(n2, n1),
        _ => Ok(transformed),
    }
}

/// Genotype draw strategy: independent Binomial inversion, or the Gaussian
/// copula with banded latent correlation when a bandwidth is configured.
enum GenotypeSampler {
    Independent {
        p: Vec<f64>,
    },
    Copula {
        /// Lower Cholesky factor of the banded latent correlation.
        chol: DMatrix<f64>,
        /// Per-instrument latent thresholds Φ⁻¹((1−p)²) and
        /// Φ⁻¹((1−p)² + 2p(1−p)).
        cut0: Vec<f64>,
        cut1: Vec<f64>,
        l: usize,
    },
}

impl GenotypeSampler {
    fn new(config: &DgpConfig, p: &[f64]) -> Result<Self> {
        if config.corr_bandwidth == 0 {
            return Ok(Self::Independent { p: p.to_vec() });
        }
        let l = config.n_instruments;
        let banded = banded_correlation(l, config.corr_bandwidth, config.corr_rho)?;
        let chol = nalgebra::Cholesky::new(banded.as_matrix().clone())
            .ok_or_else(|| {
                Error::Config(
                    "the banded latent correlation admits no Cholesky factorization".into(),
                )
            })?
            .l();
        let mut cut0 = Vec::with_capacity(l);
        let mut cut1 = Vec::with_capacity(l);
        for &pj in p {
            let q = 1.0 - pj;
            let t0 = q * q;
            let t1 = t0 + 2.0 * pj * q;
            cut0.push(inverse_normal_cdf(t0)?);
            cut1.push(inverse_normal_cdf(t1)?);
        }
        Ok(Self::Copula {
            chol,
            cut0,
            cut1,
            l,
        })
    }

    /// Draws n individuals' genotypes, row-major. Per individual the order
    /// is instrument 0..L (independent path: one uniform each; copula path:
    /// L latent normals, correlated, then thresholded).
    fn draw_sample(&self, n: usize, rng: &mut SimRng) -> Vec<u8> {
        match self {
            Self::Independent { p } => {
                let l = p.len();
                let mut z = Vec::with_capacity(n * l);
                for _ in 0..n {
                    for &pj in p {
                        z.push(rng.binomial2(pj));
                    }
                }
                z
            }
            Self::Copula { chol, cut0, cut1, l } => {
                let l = *l;
                let mut z = Vec::with_capacity(n * l);
                let mut latent = DVector::zeros(l);
                for _ in 0..n {
                    for j in 0..l {
                        latent[j] = rng.normal();
                    }
                    let correlated = chol * &latent;
                    for j in 0..l {
                        let v = correlated[j];
                        z.push(if v < cut0[j] {
                            0
                        } else if v < cut1[j] {
                            1
                        } else {
                            2
                        });
                    }
                }
                z
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::diagnostics::per_iv_f;

    fn small_config(seed: u64) -> DgpConfig {
        DgpConfig {
            n_outcome: 2_000,
            n_exposure: 2_000,
            n_instruments: 8,
            r: 16.0,
            seed,
            ..DgpConfig::default()
        }
    }

    #[test]
    fn gamma_vector_stays_in_its_interval_and_is_deterministic() {
        let mut rng = SimRng::base(5);
        let g = draw_gamma_vector(1.0, 100, 1_000, &mut rng).unwrap();
        let (lo, hi) = (0.070710678118654752, 0.12247448713915890);
        assert!(g.iter().all(|&x| (lo..=hi).contains(&x)));

        let mut a = SimRng::base(5);
        let mut b = SimRng::base(5);
        assert_eq!(
            draw_gamma_vector(4.0, 500, 32, &mut a).unwrap(),
            draw_gamma_vector(4.0, 500, 32, &mut b).unwrap()
        );

        assert!(matches!(
            draw_gamma_vector(0.4, 100, 5, &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gamma_vector_concentration_matches_the_strength_index() {
        // n·E[γ²] ≈ r: Monte Carlo mean over a large vector.
        let mut rng = SimRng::base(11);
        let n = 100_000;
        let g = draw_gamma_vector(25.0, n, 10_000, &mut rng).unwrap();
        let mean_sq = g.iter().map(|&x| x * x).sum::<f64>() / g.len() as f64;
        assert_relative_eq!(n as f64 * mean_sq, 25.0, max_relative = 0.01);
    }

    #[test]
    fn marginal_ols_matches_the_closed_form() {
        let z = [1.0, 2.0, 0.0, 4.0, 3.0, 2.5];
        let y = [0.3, 1.1, -0.4, 2.2, 1.4, 1.3];
        let (slope, se) = marginal_ols(&y, &z).unwrap();
        // Independent closed-form computation.
        let zbar = z.iter().sum::<f64>() / 6.0;
        let ybar = y.iter().sum::<f64>() / 6.0;
        let szz: f64 = z.iter().map(|zi| (zi - zbar) * (zi - zbar)).sum();
        let szy: f64 = z.iter().zip(&y).map(|(zi, yi)| (zi - zbar) * (yi - ybar)).sum();
        let syy: f64 = y.iter().map(|yi| (yi - ybar) * (yi - ybar)).sum();
        assert_relative_eq!(slope, szy / szz, max_relative = 1e-12);
        let se_expected = ((syy - szy * szy / szz) / (4.0 * szz)).sqrt();
        assert_relative_eq!(se, se_expected, max_relative = 1e-12);
    }

    #[test]
    fn marginal_ols_handles_exact_and_degenerate_cases() {
        let z = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = z.iter().map(|zi| 2.0 * zi).collect();
        let (slope, se) = marginal_ols(&y, &z).unwrap();
        assert_relative_eq!(slope, 2.0, max_relative = 1e-14);
        assert!(se < 1e-7, "exact fit must give (numerically) zero SE, got {se}");

        let constant_y = [5.0, 5.0, 5.0, 5.0];
        let (slope0, _) = marginal_ols(&constant_y, &z).unwrap();
        assert_relative_eq!(slope0, 0.0, epsilon = 1e-13);

        assert!(matches!(
            marginal_ols(&y, &[1.0, 1.0, 1.0, 1.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(marginal_ols(&y[..2], &z[..2]), Err(Error::Domain(_))));
        assert!(matches!(
            marginal_ols(&y, &z[..3]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn datasets_are_bit_identical_under_the_same_seed() {
        let config = small_config(404);
        let a = generate_dataset(&config).unwrap();
        let b = generate_dataset(&config).unwrap();
        assert_eq!(a, b);

        let c = generate_dataset(&small_config(405)).unwrap();
        assert_ne!(a.summary, c.summary);
    }

    #[test]
    fn null_model_keeps_outcome_effects_near_zero() {
        // β = 0, α = 0: every Γ̂ is pure noise, so |Γ̂| stays within a few
        // standard errors.
        let config = DgpConfig {
            beta: 0.0,
            ..small_config(17)
        };
        let ds = generate_dataset(&config).unwrap();
        let s = &ds.summary;
        let within = (0..config.n_instruments)
            .filter(|&j| {
                let se = s.cov_outcome().get(j, j).sqrt();
                s.beta_outcome()[j].abs() <= 4.0 * se
            })
            .count();
        assert_eq!(within, config.n_instruments, "a |Γ̂| beyond 4 SE under the null");
    }

    #[test]
    fn per_instrument_f_tracks_the_strength_index() {
        // Mean marginal F over replicates ≈ r + 1 (the point of the
        // standardized-scale γ draw). 40 replicates at modest n keep this
        // fast; the tolerance is generous but would catch any scale error
        // (unstandardized instruments would land near 0.4·r + 1).
        let r = 25.0;
        let mut mean_f = 0.0;
        let reps = 40;
        for seed in 0..reps {
            let config = DgpConfig {
                r,
                n_outcome: 8_000,
                n_exposure: 8_000,
                n_instruments: 5,
                seed,
                ..DgpConfig::default()
            };
            let ds = generate_dataset(&config).unwrap();
            let fs = per_iv_f(&ds.summary);
            mean_f += fs.iter().sum::<f64>() / fs.len() as f64;
        }
        mean_f /= reps as f64;
        assert!(
            (mean_f - (r + 1.0)).abs() < 2.0,
            "mean per-IV F {mean_f} not within 2 of r + 1 = {}",
            r + 1.0
        );
    }

    #[test]
    fn correlated_instruments_show_the_banded_pattern() {
        let config = DgpConfig {
            n_outcome: 20_000,
            n_exposure: 20_000,
            n_instruments: 6,
            corr_bandwidth: 1,
            corr_rho: 0.3,
            seed: 99,
            ..DgpConfig::default()
        };
        let ds = generate_dataset(&config).unwrap();
        let corr = ds.exposure_sample.empirical_correlation().unwrap();
        for j in 0..5 {
            let adjacent = corr.get(j, j + 1);
            assert!(
                (0.15..0.4).contains(&adjacent),
                "adjacent correlation {adjacent} not clearly positive"
            );
        }
        for j in 0..4 {
            let distant = corr.get(j, j + 2);
            assert!(
                distant.abs() < 0.08,
                "beyond-band correlation {distant} should be near zero"
            );
        }

        let independent = generate_dataset(&small_config(7)).unwrap();
        let corr0 = independent.exposure_sample.empirical_correlation().unwrap();
        let max_off = (0..8)
            .flat_map(|j| (j + 1..8).map(move |k| (j, k)))
            .map(|(j, k)| corr0.get(j, k).abs())
            .fold(0.0, f64::max);
        assert!(max_off < 0.06, "independent instruments correlate at {max_off}");
    }

    #[test]
    fn endogeneity_biases_naive_regression_but_not_the_model() {
        // With ρ = 0.5 and β = 0, D and Y correlate through the confounder
        // even though no causal effect exists — the raw phenotype
        // correlation must show it, confirming ε really carries ρδ.
        let config = DgpConfig {
            rho_endogeneity: 0.5,
            beta: 0.0,
            ..small_config(23)
        };
        let ds = generate_dataset(&config).unwrap();
        let y = &ds.outcome_sample.phenotype;
        // Rebuild D₁ from the summary? Not available — instead use the
        // exposure sample: D₂ and Y₁ are from different samples, so check
        // instead that Y's variance matches β²·Var(D) + Var(ε) ≈ 1.
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|yi| (yi - mean) * (yi - mean)).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 0.1, "Var(Y) = {var}, expected ≈ 1 under β = 0");
    }

    #[test]
    fn invalid_instruments_shift_the_outcome_summaries() {
        let l = 8;
        let mut alpha = vec![0.0; l];
        for j in 0..l / 2 {
            alpha[j] = 0.25;
        }
        let config = DgpConfig {
            alpha_direct: alpha,
            beta: 0.0,
            n_outcome: 20_000,
            n_exposure: 20_000,
            n_instruments: l,
            r: 16.0,
            seed: 31,
            ..DgpConfig::default()
        };
        let ds = generate_dataset(&config).unwrap();
        let s = &ds.summary;
        for j in 0..l / 2 {
            let z = s.beta_outcome()[j] / s.cov_outcome().get(j, j).sqrt();
            assert!(z > 5.0, "invalid instrument {j} has z = {z}, expected a large direct effect");
        }
        for j in l / 2..l {
            let z = s.beta_outcome()[j] / s.cov_outcome().get(j, j).sqrt();
            assert!(z.abs() < 4.5, "valid instrument {j} has z = {z} under β = 0");
        }
    }

    #[test]
    fn stress_transform_recenters_on_attenuated_means() {
        let ds = generate_dataset(&small_config(61)).unwrap();
        let base = &ds.summary;
        let l = base.n_instruments();

        // K = 1, β_true = 0.7: each estimate stays within a few SDs of its
        // target mean.
        let mut rng = SimRng::base(8);
        let t = stress_transform(base, 1.0, 0.7, &mut rng).unwrap();
        for j in 0..l {
            let sd_e = base.cov_exposure().get(j, j).sqrt();
            let sd_o = base.cov_outcome().get(j, j).sqrt();
            assert!((t.beta_exposure()[j] - base.beta_exposure()[j]).abs() < 5.0 * sd_e);
            assert!((t.beta_outcome()[j] - 0.7 * base.beta_exposure()[j]).abs() < 5.0 * sd_o);
        }
        assert_eq!(t.n_exposure(), base.n_exposure());
        assert_eq!(t.n_outcome(), base.n_outcome());
        assert_eq!(t.cov_exposure(), base.cov_exposure());

        // K = 0 on an unambiguously strong dataset: every estimate had
        // z = 100, and afterwards γ̂ is pure noise at the reported SD (still
        // advertising strength) — |γ̂| collapses from 1 to below 0.05.
        let strong = SummaryData::from_standard_errors(
            &[1.0; 6],
            &[0.01; 6],
            &[0.4; 6],
            &[0.02; 6],
        )
        .unwrap();
        let mut rng0 = SimRng::base(9);
        let t0 = stress_transform(&strong, 0.0, 0.7, &mut rng0).unwrap();
        for j in 0..6 {
            assert!(t0.beta_exposure()[j].abs() < 0.05);
            assert!(t0.beta_outcome()[j].abs() < 0.1);
        }

        // Reproducibility: identical streams give identical transforms.
        let mut r1 = SimRng::replicate(3, 5);
        let mut r2 = SimRng::replicate(3, 5);
        assert_eq!(
            stress_transform(base, 0.5, 0.0, &mut r1).unwrap(),
            stress_transform(base, 0.5, 0.0, &mut r2).unwrap()
        );

        // Guards.
        let mut rng = SimRng::base(1);
        assert!(matches!(
            stress_transform(base, -0.1, 0.0, &mut rng),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            stress_transform(base, 1.1, 0.0, &mut rng),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            stress_transform(base, 0.5, f64::NAN, &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn config_validation_names_each_problem() {
        let bad = DgpConfig {
            n_outcome: 2,
            r: 0.2,
            rho_endogeneity: 1.5,
            allele_freq_range: (0.9, 0.1),
            alpha_direct: vec![1.0, 2.0],
            n_instruments: 3,
            ..DgpConfig::default()
        };
        let err = bad.validate().unwrap_err();
        let text = err.to_string();
        for needle in ["sample sizes", "r must be", "rho_endogeneity", "allele_freq_range", "alpha_direct"] {
            assert!(text.contains(needle), "missing {needle:?} in {text}");
        }

        // Tridiagonal with entry 0.8 at L = 4 has min eigenvalue
        // 1 + 1.6·cos(4π/5) ≈ −0.29 — genuinely not positive definite.
        let non_pd = DgpConfig {
            n_instruments: 4,
            corr_bandwidth: 1,
            corr_rho: 0.8,
            ..DgpConfig::default()
        };
        assert!(matches!(non_pd.validate(), Err(Error::Config(_))));

        assert!(DgpConfig::default().validate().is_ok());
        assert!(banded_correlation(20, 1, 0.3).is_ok());
        assert!(banded_correlation(20, 2, 0.3).is_ok());
    }
}
