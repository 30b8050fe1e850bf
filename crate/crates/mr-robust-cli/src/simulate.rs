//! The `simulate` command: run a seeded Monte Carlo experiment described by
//! a TOML file and emit rejection/coverage rates as CSV.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use mr_robust::simulation::{
    run_experiment, DgpConfig, ExperimentConfig, ExperimentKind, ExperimentResult,
};
use serde::Deserialize;

use crate::{classify, CliError};

/// Arguments of `mr-robust simulate`.
#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Experiment description file (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
}

/// Direct instrument–outcome effects: one value for a proportion of
/// instruments, or an explicit per-instrument vector.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AlphaDirect {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// The TOML document. Every key optional here; requiredness is enforced with
/// named errors afterwards. Unknown keys are rejected by serde.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateDoc {
    kind: Option<String>,
    n_outcome: Option<usize>,
    n_exposure: Option<usize>,
    #[serde(rename = "L")]
    l: Option<usize>,
    beta: Option<f64>,
    rho: Option<f64>,
    r: Option<f64>,
    alpha_direct: Option<AlphaDirect>,
    alpha_direct_proportion: Option<f64>,
    corr_bandwidth: Option<usize>,
    corr_rho: Option<f64>,
    beta0_grid: Option<Vec<f64>>,
    #[serde(rename = "K_grid")]
    k_grid: Option<Vec<f64>>,
    replicates: Option<usize>,
    alpha_level: Option<f64>,
    seed: Option<u64>,
}

/// Runs the experiment described by `args.config` and returns the CSV text.
pub fn run_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let bytes = crate::io::read_file(&args.config)?;
    let text = String::from_utf8(bytes).map_err(|e| {
        CliError::Input(format!("{}: not UTF-8: {e}", args.config.display()))
    })?;
    let doc: SimulateDoc = toml::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.config.display())))?;
    let config = experiment_from_doc(doc)
        .map_err(|e| crate::io::prefix_path(&args.config, e))?;
    let result = run_experiment(&config).map_err(classify)?;
    Ok(render_simulation_csv(&result))
}

/// Builds a validated [`ExperimentConfig`] from the parsed document.
fn experiment_from_doc(doc: SimulateDoc) -> Result<ExperimentConfig, CliError> {
    let kind_text = doc
        .kind
        .ok_or_else(|| CliError::Input("missing required key \"kind\"".to_string()))?;
    let kind = ExperimentKind::from_str(&kind_text).map_err(classify)?;
    let seed = doc
        .seed
        .ok_or_else(|| CliError::Input("missing required key \"seed\"".to_string()))?;

    let grid = match (kind, doc.beta0_grid, doc.k_grid) {
        (ExperimentKind::Stress, Some(_), _) => {
            return Err(CliError::Input(
                "a stress experiment takes \"K_grid\", not \"beta0_grid\"".to_string(),
            ));
        }
        (ExperimentKind::Stress, None, Some(grid)) => grid,
        (ExperimentKind::Stress, None, None) => {
            return Err(CliError::Input(
                "missing required key \"K_grid\" for a stress experiment".to_string(),
            ));
        }
        (_, _, Some(_)) => {
            return Err(CliError::Input(format!(
                "a {kind} experiment takes \"beta0_grid\", not \"K_grid\""
            )));
        }
        (_, Some(grid), None) => grid,
        (_, None, None) => {
            return Err(CliError::Input(format!(
                "missing required key \"beta0_grid\" for a {kind} experiment"
            )));
        }
    };

    let base = DgpConfig::default();
    let n_instruments = doc.l.unwrap_or(base.n_instruments);

    let alpha_direct = match (doc.alpha_direct, doc.alpha_direct_proportion) {
        (None, None) => Vec::new(),
        (None, Some(_)) => {
            return Err(CliError::Input(
                "\"alpha_direct_proportion\" requires a scalar \"alpha_direct\"".to_string(),
            ));
        }
        (Some(AlphaDirect::Vector(v)), None) => v,
        (Some(AlphaDirect::Vector(_)), Some(_)) => {
            return Err(CliError::Input(
                "\"alpha_direct_proportion\" applies only to a scalar \"alpha_direct\", \
                 not an explicit vector"
                    .to_string(),
            ));
        }
        (Some(AlphaDirect::Scalar(_)), None) => {
            return Err(CliError::Input(
                "scalar \"alpha_direct\" requires \"alpha_direct_proportion\" \
                 to say how many instruments it applies to"
                    .to_string(),
            ));
        }
        (Some(AlphaDirect::Scalar(value)), Some(proportion)) => {
            if !(0.0..=1.0).contains(&proportion) || !proportion.is_finite() {
                return Err(CliError::Input(format!(
                    "\"alpha_direct_proportion\" must lie in [0, 1], got {proportion}"
                )));
            }
            let k = ((proportion * n_instruments as f64).round() as usize).min(n_instruments);
            let mut v = vec![0.0; n_instruments];
            v[..k].fill(value);
            v
        }
    };

    let dgp = DgpConfig {
        n_outcome: doc.n_outcome.unwrap_or(base.n_outcome),
        n_exposure: doc.n_exposure.unwrap_or(base.n_exposure),
        n_instruments,
        beta: doc.beta.unwrap_or(base.beta),
        rho_endogeneity: doc.rho.unwrap_or(base.rho_endogeneity),
        r: doc.r.unwrap_or(base.r),
        alpha_direct,
        allele_freq_range: base.allele_freq_range,
        corr_bandwidth: doc.corr_bandwidth.unwrap_or(base.corr_bandwidth),
        corr_rho: doc.corr_rho.unwrap_or(base.corr_rho),
        seed,
    };

    // Numeric validation (grid finiteness, α range, DGP ranges) happens in
    // `run_experiment`, which checks the whole config before any work.
    Ok(ExperimentConfig {
        kind,
        dgp,
        grid,
        replicates: doc.replicates.unwrap_or(500),
        alpha: doc.alpha_level.unwrap_or(0.05),
    })
}

/// Renders the rate table as CSV: one row per grid value × series, grid-major.
/// Floats use shortest round-trip formatting, so reruns are byte-identical.
pub fn render_simulation_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("grid_value,test,rate,replicates,seed\n");
    for (gi, g) in result.grid.iter().enumerate() {
        for series in &result.series {
            let _ = writeln!(
                out,
                "{g},{},{},{},{}",
                series.label, series.rates[gi], result.replicates, result.seed
            );
        }
    }
    out
}
