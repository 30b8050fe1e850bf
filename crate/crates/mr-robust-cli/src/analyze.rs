//! The `analyze` command: run the full robust-test battery on a
//! summary-statistics file and emit one report.

use std::path::PathBuf;
use std::str::FromStr;

use mr_robust::hypothesis::{mr_ar, mr_clr, mr_k, TestKind};
use mr_robust::inference::{invert_test, mr_liml, q_pleiotropy, InversionOptions, LimlOptions};
use mr_robust::{diagnostics, summary, CorrelationSpec64, Error};

use crate::io;
use crate::report::{
    liml_entry, region_entry, strength_entry, AnalysisReport, PleiotropyEntry, Provenance,
    ReportFormat, TestEntry,
};
use crate::{classify, CliError};

/// Arguments of `mr-robust analyze`.
#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    /// Summary-statistics CSV (columns: id, beta_exposure, se_exposure,
    /// beta_outcome, se_outcome).
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Null effect value to test; repeat the flag for several (default 0).
    #[arg(long = "beta0", value_name = "FLOAT")]
    pub beta0: Vec<f64>,

    /// Test level α in (0, 1).
    #[arg(long, default_value_t = 0.05, value_name = "FLOAT")]
    pub alpha: f64,

    /// Comma-separated subset of tests: mrAR, mrK, mrCLR.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "mrAR,mrK,mrCLR",
        value_name = "LIST"
    )]
    pub tests: Vec<String>,

    /// Exposure-study instrument correlation matrix (headerless CSV).
    #[arg(long, value_name = "PATH")]
    pub corr_exposure: Option<PathBuf>,

    /// Outcome-study instrument correlation matrix (headerless CSV).
    #[arg(long, value_name = "PATH")]
    pub corr_outcome: Option<PathBuf>,

    /// Exposure-study sample size (required with correlation matrices).
    #[arg(long, value_name = "INT")]
    pub n_exposure: Option<usize>,

    /// Outcome-study sample size (required with correlation matrices).
    #[arg(long, value_name = "INT")]
    pub n_outcome: Option<usize>,

    /// Grid points for confidence-region inversion (default 4001).
    #[arg(long, value_name = "INT")]
    pub grid_points: Option<usize>,

    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    pub format: ReportFormat,
}

/// Runs the analysis and returns the rendered report.
pub fn run_analyze(args: &AnalyzeArgs) -> Result<String, CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Usage(format!(
            "--alpha must lie strictly between 0 and 1, got {}",
            args.alpha
        )));
    }
    let kinds = parse_test_list(&args.tests)?;
    let beta0s: Vec<f64> = if args.beta0.is_empty() {
        vec![0.0]
    } else {
        args.beta0.clone()
    };
    for &b in &beta0s {
        if !b.is_finite() {
            return Err(CliError::Usage(format!(
                "--beta0 values must be finite, got {b}"
            )));
        }
    }

    // The four correlation-adjustment flags travel together.
    let adjust_flags = [
        ("--corr-exposure", args.corr_exposure.is_some()),
        ("--corr-outcome", args.corr_outcome.is_some()),
        ("--n-exposure", args.n_exposure.is_some()),
        ("--n-outcome", args.n_outcome.is_some()),
    ];
    let adjusting = adjust_flags.iter().any(|(_, present)| *present);
    if adjusting {
        let missing: Vec<&str> = adjust_flags
            .iter()
            .filter(|(_, present)| !*present)
            .map(|(name, _)| *name)
            .collect();
        if !missing.is_empty() {
            return Err(CliError::Usage(format!(
                "correlation adjustment needs --corr-exposure, --corr-outcome, \
                 --n-exposure and --n-outcome together; missing: {}",
                missing.join(", ")
            )));
        }
    }

    let input_bytes = io::read_file(&args.input)?;
    let input_sha256 = io::sha256_hex(&input_bytes);
    let parsed = io::parse_summary_bytes(&input_bytes)
        .map_err(|e| io::prefix_path(&args.input, e))?;
    let l = parsed.data.n_instruments();

    let mut corr_exposure_sha256 = None;
    let mut corr_outcome_sha256 = None;
    let data = if adjusting {
        let (corr_e_path, corr_o_path) = (
            args.corr_exposure.as_ref().expect("checked present"),
            args.corr_outcome.as_ref().expect("checked present"),
        );
        let corr_e_bytes = io::read_file(corr_e_path)?;
        let corr_o_bytes = io::read_file(corr_o_path)?;
        corr_exposure_sha256 = Some(io::sha256_hex(&corr_e_bytes));
        corr_outcome_sha256 = Some(io::sha256_hex(&corr_o_bytes));
        let corr_e = io::parse_matrix_bytes(&corr_e_bytes, l)
            .map_err(|e| io::prefix_path(corr_e_path, e))?;
        let corr_o = io::parse_matrix_bytes(&corr_o_bytes, l)
            .map_err(|e| io::prefix_path(corr_o_path, e))?;
        let corr_e = CorrelationSpec64::new(corr_e).map_err(classify)?;
        let corr_o = CorrelationSpec64::new(corr_o).map_err(classify)?;
        let sized = parsed
            .data
            .clone()
            .with_sample_sizes(
                args.n_exposure.expect("checked present"),
                args.n_outcome.expect("checked present"),
            )
            .map_err(classify)?;
        summary::adjust_for_correlation(&sized, &corr_e, &corr_o).map_err(classify)?
    } else {
        parsed.data.clone()
    };

    let mut inversion = InversionOptions::default();
    if let Some(gp) = args.grid_points {
        inversion.grid_points = gp;
    }

    let mut tests = Vec::with_capacity(kinds.len() * beta0s.len());
    for &kind in &kinds {
        for &b0 in &beta0s {
            let result = match kind {
                TestKind::MrAr => mr_ar(&data, b0),
                TestKind::MrK => mr_k(&data, b0),
                TestKind::MrClr => mr_clr(&data, b0),
            }
            .map_err(classify)?;
            tests.push(TestEntry::from(&result));
        }
    }

    let mut regions = Vec::with_capacity(kinds.len());
    for &kind in &kinds {
        let region = invert_test(&data, kind, args.alpha, inversion).map_err(classify)?;
        regions.push(region_entry(kind, &region));
    }

    let liml = mr_liml(&data, LimlOptions::default()).map_err(classify)?;
    let strength = diagnostics::instrument_strength(&data).map_err(classify)?;
    let pleiotropy = match q_pleiotropy(&data, LimlOptions::default()) {
        Ok(p) => PleiotropyEntry::Test {
            statistic: p.statistic,
            df: p.df,
            p_value: p.p_value,
            beta_liml: p.beta_liml,
        },
        Err(Error::Unsupported(reason)) => PleiotropyEntry::Unsupported {
            unsupported: reason,
        },
        Err(other) => return Err(classify(other)),
    };

    let report = AnalysisReport {
        tests,
        regions,
        liml: liml_entry(&liml),
        strength: strength_entry(&strength, &parsed.ids),
        pleiotropy,
        provenance: Provenance {
            input_sha256,
            corr_exposure_sha256,
            corr_outcome_sha256,
            seed: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    };

    Ok(match args.format {
        ReportFormat::Json => report.render_json(),
        ReportFormat::Tsv => report.render_tsv(),
    })
}

/// Parses and de-duplicates the `--tests` list, preserving order.
fn parse_test_list(names: &[String]) -> Result<Vec<TestKind>, CliError> {
    let mut kinds = Vec::new();
    for name in names {
        let trimmed = name.trim();
        if trimmed.is_empty() {
            continue;
        }
        let kind = TestKind::from_str(trimmed).map_err(|_| {
            CliError::Usage(format!(
                "unknown test {trimmed:?}; valid tests are mrAR, mrK, mrCLR"
            ))
        })?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        return Err(CliError::Usage(
            "--tests selected no tests; valid tests are mrAR, mrK, mrCLR".to_string(),
        ));
    }
    Ok(kinds)
}
