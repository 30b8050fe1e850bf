//! The Monte Carlo engine: seeded, replicable experiments over a grid.
//!
//! Every experiment follows the same reproducibility discipline: replicate i
//! draws from its own counter-based stream ([`SimRng::replicate`] with the
//! experiment seed), so results are bit-identical regardless of how many
//! worker threads run and replicates act as common random numbers across
//! grid cells. Replicates parallelize through rayon; the grid dimension
//! stays sequential.
//!
//! Experiment kinds:
//!
//! * [`ExperimentKind::Size`] — each grid value is both the true β and the
//!   tested β₀; the series are rejection rates (empirical size) of the three
//!   tests.
//! * [`ExperimentKind::Power`] — the true β stays at the DGP's `beta`
//!   while the grid scans tested β₀ values; series are rejection rates
//!   (power against each null).
//! * [`ExperimentKind::Invalid`] — one dataset per replicate (typically
//!   with direct effects switched on); series are the mrAR rejection rate
//!   at each grid β₀ plus two grid-constant series, the frequency of an
//!   empty mrAR confidence region and the pleiotropy-test rejection rate.
//! * [`ExperimentKind::Correlated`] — like `Size`, but instruments are
//!   drawn through the banded copula and every replicate's summaries are
//!   adjusted with the empirical in-sample correlation before testing.
//! * [`ExperimentKind::Stress`] — one base dataset on the seed's stream 0;
//!   each replicate redraws the estimates with attenuation K (the grid),
//!   then records per test whether β_true is covered and whether the region
//!   is unbounded on either side.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hypothesis::TestKind;
use crate::inference::evaluator::QEvaluator;
use crate::inference::{accept_at, endpoint_accepts, invert_test, q_pleiotropy};
use crate::inference::{InversionOptions, LimlOptions};
use crate::summary::{adjust_for_correlation, SummaryData};

use super::dgp::{generate_dataset, generate_dataset_with, stress_transform, DgpConfig};
use super::rng::SimRng;

/// What an experiment varies and measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    /// Size calibration: grid = β = β₀.
    Size,
    /// Power curves: grid = tested β₀, truth held at the DGP's `beta`.
    Power,
    /// Invalid instruments: grid = β₀ scan, plus region-empty and
    /// pleiotropy-rejection frequencies.
    Invalid,
    /// Correlated instruments with empirical-correlation adjustment;
    /// grid = β = β₀.
    Correlated,
    /// Estimate-attenuation stress: grid = K, base β is the true value.
    Stress,
}

impl ExperimentKind {
    /// Stable lowercase name, also accepted by `FromStr`.
    pub fn name(self) -> &'static str {
        match self {
            Self::Size => "size",
            Self::Power => "power",
            Self::Invalid => "invalid",
            Self::Correlated => "correlated",
            Self::Stress => "stress",
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "size" => Ok(Self::Size),
            "power" => Ok(Self::Power),
            "invalid" => Ok(Self::Invalid),
            "correlated" => Ok(Self::Correlated),
            "stress" => Ok(Self::Stress),
            other => Err(Error::Config(format!(
                "unknown experiment kind {other:?}; expected one of \
                 size, power, invalid, correlated, stress"
            ))),
        }
    }
}

/// Full specification of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Which design to run.
    pub kind: ExperimentKind,
    /// The data-generating process. Its `beta` is the fixed true effect for
    /// `Power` and `Invalid` grids and the stress experiment's β_true
    /// (`Size` and `Correlated` override it cell-by-cell with the grid
    /// value); its `seed` is the experiment seed.
    pub dgp: DgpConfig,
    /// The tested β₀ values, or the attenuation factors K for `Stress`.
    pub grid: Vec<f64>,
    /// Monte Carlo replicates per grid cell.
    pub replicates: usize,
    /// Test level.
    pub alpha: f64,
}

/// One named curve over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSeries {
    /// E.g. `"mrAR"`, `"mrAR:empty"`, `"mrK:coverage"`.
    pub label: String,
    /// One rate per grid entry, each in [0, 1].
    pub rates: Vec<f64>,
}

/// The outcome of [`run_experiment`]: everything needed to reproduce and
/// report it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// The design that ran.
    pub kind: ExperimentKind,
    /// The grid as configured.
    pub grid: Vec<f64>,
    /// Monte Carlo frequency curves.
    pub series: Vec<ExperimentSeries>,
    /// Replicates per cell.
    pub replicates: usize,
    /// The seed everything derived from.
    pub seed: u64,
    /// The test level used.
    pub alpha: f64,
}

fn validate(config: &ExperimentConfig) -> Result<()> {
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie strictly inside (0, 1), got {}",
            config.alpha
        )));
    }
    if config.replicates == 0 {
        return Err(Error::Config("at least one replicate is required".into()));
    }
    if config.grid.is_empty() {
        return Err(Error::Config("the experiment grid is empty".into()));
    }
    if config.grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::Config("grid entries must be finite".into()));
    }
    if config.kind == ExperimentKind::Stress && config.grid.iter().any(|&k| !(0.0..=1.0).contains(&k))
    {
        return Err(Error::Config(
            "stress grids hold attenuation factors K in [0, 1]".into(),
        ));
    }
    config.dgp.validate()
}

fn replicate_error(index: usize, e: Error) -> Error {
    Error::Numerical(format!("replicate {index}: {e}"))
}

/// Acceptance of all three tests at one β₀, sharing one evaluator.
/// Evaluation failures are surfaced as errors rather than silently counted.
fn acceptances(
    eval: &QEvaluator<f64>,
    beta0: f64,
    alpha: f64,
) -> Result<[bool; 3]> {
    let mut errors = 0usize;
    let mut out = [false; 3];
    for (slot, kind) in out.iter_mut().zip(TestKind::all()) {
        *slot = accept_at(kind, eval, beta0, alpha, &mut errors);
    }
    if errors > 0 {
        return Err(Error::Numerical(format!(
            "{errors} test evaluations failed at beta0 = {beta0}"
        )));
    }
    Ok(out)
}

fn rates_from_counts(counts: &[usize], replicates: usize) -> Vec<f64> {
    counts
        .iter()
        .map(|&c| c as f64 / replicates as f64)
        .collect()
}

/// Runs the experiment described by `config`. Deterministic in the seed:
/// thread count never changes the result.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    validate(config)?;
    let series = match config.kind {
        ExperimentKind::Size | ExperimentKind::Correlated => run_size_like(config)?,
        ExperimentKind::Power => run_power(config)?,
        ExperimentKind::Invalid => run_invalid(config)?,
        ExperimentKind::Stress => run_stress(config, None)?,
    };
    Ok(ExperimentResult {
        kind: config.kind,
        grid: config.grid.clone(),
        series,
        replicates: config.replicates,
        seed: config.dgp.seed,
        alpha: config.alpha,
    })
}

/// Runs a stress experiment against an externally supplied base dataset's
/// summaries instead of generating them from the DGP — the hook for
/// stressing real data. `config.dgp.beta` still names β_true and
/// `config.dgp.seed` the stream seed; the grid holds K.
pub fn run_stress_experiment_on(
    config: &ExperimentConfig,
    base: &SummaryData<f64>,
) -> Result<ExperimentResult> {
    if config.kind != ExperimentKind::Stress {
        return Err(Error::Config(
            "run_stress_experiment_on only serves stress experiments".into(),
        ));
    }
    validate(config)?;
    let series = run_stress(config, Some(base))?;
    Ok(ExperimentResult {
        kind: config.kind,
        grid: config.grid.clone(),
        series,
        replicates: config.replicates,
        seed: config.dgp.seed,
        alpha: config.alpha,
    })
}

/// Size and Correlated: one cell per grid value g, true β = tested β₀ = g.
fn run_size_like(config: &ExperimentConfig) -> Result<Vec<ExperimentSeries>> {
    let adjust = config.kind == ExperimentKind::Correlated;
    let mut counts = vec![[0usize; 3]; config.grid.len()];
    for (cell, &g) in config.grid.iter().enumerate() {
        let cell_dgp = DgpConfig {
            beta: g,
            ..config.dgp.clone()
        };
        let accepted = run_cell(&cell_dgp, config, g, adjust)?;
        for flags in accepted {
            for (t, &acc) in flags.iter().enumerate() {
                if !acc {
                    counts[cell][t] += 1;
                }
            }
        }
    }
    Ok(test_series(&counts, config.replicates))
}

/// Power: the truth is fixed at the DGP's `beta`, so each replicate's
/// dataset serves the whole β₀ grid.
fn run_power(config: &ExperimentConfig) -> Result<Vec<ExperimentSeries>> {
    let seed = config.dgp.seed;
    let alpha = config.alpha;
    let grid = &config.grid;
    let per_replicate: Vec<Vec<[bool; 3]>> = (0..config.replicates)
        .into_par_iter()
        .map(|i| -> Result<Vec<[bool; 3]>> {
            let mut rng = SimRng::replicate(seed, i as u64);
            let ds =
                generate_dataset_with(&config.dgp, &mut rng).map_err(|e| replicate_error(i, e))?;
            let eval = QEvaluator::new(&ds.summary).map_err(|e| replicate_error(i, e))?;
            grid.iter()
                .map(|&b0| acceptances(&eval, b0, alpha).map_err(|e| replicate_error(i, e)))
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut counts = vec![[0usize; 3]; grid.len()];
    for rep in &per_replicate {
        for (cell, flags) in rep.iter().enumerate() {
            for (t, &acc) in flags.iter().enumerate() {
                if !acc {
                    counts[cell][t] += 1;
                }
            }
        }
    }
    Ok(test_series(&counts, config.replicates))
}

/// One grid cell: `replicates` fresh datasets, three acceptance flags each.
fn run_cell(
    cell_dgp: &DgpConfig,
    config: &ExperimentConfig,
    beta0: f64,
    adjust: bool,
) -> Result<Vec<[bool; 3]>> {
    let seed = config.dgp.seed;
    let alpha = config.alpha;
    (0..config.replicates)
        .into_par_iter()
        .map(|i| -> Result<[bool; 3]> {
            let mut rng = SimRng::replicate(seed, i as u64);
            let ds = generate_dataset_with(cell_dgp, &mut rng).map_err(|e| replicate_error(i, e))?;
            let summary = if adjust {
                let corr_exposure = ds
                    .exposure_sample
                    .empirical_correlation()
                    .map_err(|e| replicate_error(i, e))?;
                let corr_outcome = ds
                    .outcome_sample
                    .empirical_correlation()
                    .map_err(|e| replicate_error(i, e))?;
                adjust_for_correlation(&ds.summary, &corr_exposure, &corr_outcome)
                    .map_err(|e| replicate_error(i, e))?
            } else {
                ds.summary
            };
            let eval = QEvaluator::new(&summary).map_err(|e| replicate_error(i, e))?;
            acceptances(&eval, beta0, alpha).map_err(|e| replicate_error(i, e))
        })
        .collect()
}

fn test_series(counts: &[[usize; 3]], replicates: usize) -> Vec<ExperimentSeries> {
    TestKind::all()
        .into_iter()
        .enumerate()
        .map(|(t, kind)| ExperimentSeries {
            label: kind.name().to_string(),
            rates: rates_from_counts(
                &counts.iter().map(|c| c[t]).collect::<Vec<_>>(),
                replicates,
            ),
        })
        .collect()
}

/// Invalid instruments: replicate-major. Each replicate draws one dataset,
/// scans mrAR rejection over the β₀ grid, inverts the mrAR region once, and
/// runs the pleiotropy test once.
fn run_invalid(config: &ExperimentConfig) -> Result<Vec<ExperimentSeries>> {
    let seed = config.dgp.seed;
    let alpha = config.alpha;
    let grid = &config.grid;
    let per_replicate: Vec<(Vec<bool>, bool, bool)> = (0..config.replicates)
        .into_par_iter()
        .map(|i| -> Result<(Vec<bool>, bool, bool)> {
            let mut rng = SimRng::replicate(seed, i as u64);
            let ds =
                generate_dataset_with(&config.dgp, &mut rng).map_err(|e| replicate_error(i, e))?;
            let eval = QEvaluator::new(&ds.summary).map_err(|e| replicate_error(i, e))?;
            let mut errors = 0usize;
            let rejected: Vec<bool> = grid
                .iter()
                .map(|&b0| !accept_at(TestKind::MrAr, &eval, b0, alpha, &mut errors))
                .collect();
            if errors > 0 {
                return Err(replicate_error(
                    i,
                    Error::Numerical(format!("{errors} mrAR evaluations failed")),
                ));
            }
            let region = invert_test(
                &ds.summary,
                TestKind::MrAr,
                alpha,
                InversionOptions::default(),
            )
            .map_err(|e| replicate_error(i, e))?;
            let pleiotropy = q_pleiotropy(&ds.summary, LimlOptions::default())
                .map_err(|e| replicate_error(i, e))?;
            Ok((rejected, region.is_empty(), pleiotropy.p_value < alpha))
        })
        .collect::<Result<_>>()?;

    let mut reject_counts = vec![0usize; grid.len()];
    let mut empty_count = 0usize;
    let mut pleiotropy_count = 0usize;
    for (rejected, empty, pl) in &per_replicate {
        for (cell, &r) in rejected.iter().enumerate() {
            if r {
                reject_counts[cell] += 1;
            }
        }
        if *empty {
            empty_count += 1;
        }
        if *pl {
            pleiotropy_count += 1;
        }
    }
    let n = config.replicates;
    let constant = |count: usize| vec![count as f64 / n as f64; grid.len()];
    Ok(vec![
        ExperimentSeries {
            label: TestKind::MrAr.name().to_string(),
            rates: rates_from_counts(&reject_counts, n),
        },
        ExperimentSeries {
            label: format!("{}:empty", TestKind::MrAr.name()),
            rates: constant(empty_count),
        },
        ExperimentSeries {
            label: "q_pleiotropy".to_string(),
            rates: constant(pleiotropy_count),
        },
    ])
}

/// Stress: one base dataset (stream 0 of the seed unless supplied), then
/// per replicate a fresh estimate redraw at each K, in grid order on a
/// single stream — so the K grid itself is part of the documented draw
/// sequence.
fn run_stress(
    config: &ExperimentConfig,
    external_base: Option<&SummaryData<f64>>,
) -> Result<Vec<ExperimentSeries>> {
    let base = match external_base {
        Some(s) => s.clone(),
        None => generate_dataset(&config.dgp)?.summary,
    };
    let beta_true = config.dgp.beta;
    let seed = config.dgp.seed;
    let alpha = config.alpha;
    let grid = &config.grid;
    let grid_points = InversionOptions::<f64>::default().grid_points;

    // Per replicate, per grid K: three (covered, infinite) pairs.
    type StressFlags = Vec<[(bool, bool); 3]>;
    let per_replicate: Vec<StressFlags> = (0..config.replicates)
        .into_par_iter()
        .map(|i| -> Result<StressFlags> {
            let mut rng = SimRng::replicate(seed, i as u64);
            grid.iter()
                .map(|&k| -> Result<[(bool, bool); 3]> {
                    let transformed = stress_transform(&base, k, beta_true, &mut rng)
                        .map_err(|e| replicate_error(i, e))?;
                    let eval =
                        QEvaluator::new(&transformed).map_err(|e| replicate_error(i, e))?;
                    let mut flags = [(false, false); 3];
                    let mut errors = 0usize;
                    for (slot, kind) in flags.iter_mut().zip(TestKind::all()) {
                        let covered = accept_at(kind, &eval, beta_true, alpha, &mut errors);
                        let (lo, hi) =
                            endpoint_accepts(kind, &eval, alpha, grid_points, &mut errors);
                        *slot = (covered, lo || hi);
                    }
                    if errors > 0 {
                        return Err(replicate_error(
                            i,
                            Error::Numerical(format!(
                                "{errors} test evaluations failed at K = {k}"
                            )),
                        ));
                    }
                    Ok(flags)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let n = config.replicates;
    let mut series = Vec::with_capacity(6);
    for (t, kind) in TestKind::all().into_iter().enumerate() {
        let mut covered = vec![0usize; grid.len()];
        let mut infinite = vec![0usize; grid.len()];
        for rep in &per_replicate {
            for (cell, flags) in rep.iter().enumerate() {
                if flags[t].0 {
                    covered[cell] += 1;
                }
                if flags[t].1 {
                    infinite[cell] += 1;
                }
            }
        }
        series.push(ExperimentSeries {
            label: format!("{}:coverage", kind.name()),
            rates: rates_from_counts(&covered, n),
        });
        series.push(ExperimentSeries {
            label: format!("{}:infinite", kind.name()),
            rates: rates_from_counts(&infinite, n),
        });
    }
    Ok(series)
}
