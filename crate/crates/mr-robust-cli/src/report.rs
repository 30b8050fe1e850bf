//! The analysis report: a serializable mirror of the library results with
//! portable representations for unbounded and empty regions.
//!
//! JSON is the primary format. Regions serialize as arrays of `[lo, hi]`
//! pairs in which an unbounded endpoint is the literal string `"-inf"` or
//! `"inf"`, plus an `empty` flag; every other numeric field is a finite JSON
//! number. The report shape is frozen by `docs/analysis-report.schema.json`,
//! shipped in this crate and embedded in the binary.

use mr_robust::hypothesis::TestKind;
use mr_robust::{ConfidenceRegion64, LimlEstimate64, StrengthReport64, TestResult64};
use serde::Serialize;

/// The published JSON Schema for [`AnalysisReport`].
pub const REPORT_SCHEMA: &str = include_str!("../docs/analysis-report.schema.json");

/// Complete result of one `analyze` invocation.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    /// One entry per requested test × tested β₀.
    pub tests: Vec<TestEntry>,
    /// One confidence region per requested test.
    pub regions: Vec<RegionEntry>,
    /// The mrLIML point estimate.
    pub liml: LimlEntry,
    /// Instrument-strength diagnostics.
    pub strength: StrengthEntry,
    /// Pleiotropy test, or the reason it does not apply.
    pub pleiotropy: PleiotropyEntry,
    /// Input digests and tool identity.
    pub provenance: Provenance,
}

/// One hypothesis-test evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct TestEntry {
    /// Test name (`mrAR`, `mrK`, `mrCLR`).
    pub test: String,
    /// The null value tested.
    pub beta0: f64,
    /// The test statistic.
    pub statistic: f64,
    /// Its p-value.
    pub p_value: f64,
}

/// One confidence region.
#[derive(Debug, Clone, Serialize)]
pub struct RegionEntry {
    /// Test name.
    pub test: String,
    /// Confidence level (1 − α).
    pub level: f64,
    /// True when no β₀ was accepted; `intervals` is then empty.
    pub empty: bool,
    /// Disjoint intervals, ascending; endpoints are numbers or the strings
    /// `"-inf"` / `"inf"`.
    pub intervals: Vec<[Endpoint; 2]>,
}

/// A region endpoint: finite number or an infinity sentinel string.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(untagged)]
pub enum Endpoint {
    /// A finite endpoint.
    Finite(f64),
    /// `"-inf"` or `"inf"`.
    Sentinel(&'static str),
}

/// The mrLIML estimate.
#[derive(Debug, Clone, Serialize)]
pub struct LimlEntry {
    /// The minimizer β̂.
    pub beta: f64,
    /// The minimized mrAR statistic.
    pub min_statistic: f64,
    /// Whether the optimizer met its tolerance.
    pub converged: bool,
}

/// Instrument-strength diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct StrengthEntry {
    /// Marginal first-stage F per instrument, in input order.
    pub per_iv_f: Vec<PerIvF>,
    /// Exact overall F; `null` when the exposure sample size is unknown.
    pub overall_f: Option<f64>,
    /// Mean-of-per-IV-F approximation to the overall F.
    pub overall_f_mean_approx: f64,
    /// Exposure-study sample size, when known.
    pub n_exposure: Option<usize>,
}

/// One instrument's F statistic.
#[derive(Debug, Clone, Serialize)]
pub struct PerIvF {
    /// Instrument identifier from the input file.
    pub id: String,
    /// Marginal F.
    pub f: f64,
}

/// Pleiotropy test outcome or an explicit unsupported marker.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum PleiotropyEntry {
    /// The test ran.
    Test {
        /// Minimized heterogeneity statistic.
        statistic: f64,
        /// Degrees of freedom (L − 1).
        df: usize,
        /// p-value against χ²_{L−1}.
        p_value: f64,
        /// The mrLIML estimate the statistic is profiled at.
        beta_liml: f64,
    },
    /// The test does not apply to this input.
    Unsupported {
        /// Why (e.g. single instrument, correlated covariances).
        unsupported: String,
    },
}

/// Input digests and tool identity; always present.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    /// SHA-256 of the summary input file.
    pub input_sha256: String,
    /// SHA-256 of the exposure correlation file, when supplied.
    pub corr_exposure_sha256: Option<String>,
    /// SHA-256 of the outcome correlation file, when supplied.
    pub corr_outcome_sha256: Option<String>,
    /// RNG seed (simulation provenance; `null` for deterministic analyses).
    pub seed: Option<u64>,
    /// Tool version that produced the report.
    pub version: String,
}

/// Output format of the `analyze` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    /// Pretty-printed JSON (the default).
    Json,
    /// Line-oriented tab-separated records.
    Tsv,
}

impl From<&TestResult64> for TestEntry {
    fn from(r: &TestResult64) -> Self {
        Self {
            test: r.kind.name().to_string(),
            beta0: r.beta0,
            statistic: r.statistic,
            p_value: r.p_value,
        }
    }
}

/// Converts a library region to its serializable form.
pub fn region_entry(kind: TestKind, region: &ConfidenceRegion64) -> RegionEntry {
    let intervals = region
        .intervals
        .iter()
        .map(|iv| {
            [
                match iv.lo {
                    Some(v) => Endpoint::Finite(v),
                    None => Endpoint::Sentinel("-inf"),
                },
                match iv.hi {
                    Some(v) => Endpoint::Finite(v),
                    None => Endpoint::Sentinel("inf"),
                },
            ]
        })
        .collect();
    RegionEntry {
        test: kind.name().to_string(),
        level: region.level,
        empty: region.is_empty(),
        intervals,
    }
}

/// Converts a library LIML estimate.
pub fn liml_entry(estimate: &LimlEstimate64) -> LimlEntry {
    LimlEntry {
        beta: estimate.beta,
        min_statistic: estimate.min_statistic,
        converged: estimate.converged,
    }
}

/// Converts a strength report, attaching instrument ids.
pub fn strength_entry(report: &StrengthReport64, ids: &[String]) -> StrengthEntry {
    StrengthEntry {
        per_iv_f: ids
            .iter()
            .zip(&report.per_iv_f)
            .map(|(id, &f)| PerIvF { id: id.clone(), f })
            .collect(),
        overall_f: report.overall_f_exact,
        overall_f_mean_approx: report.overall_f_mean_approx,
        n_exposure: report.n_exposure,
    }
}

impl AnalysisReport {
    /// Pretty JSON with a trailing newline.
    pub fn render_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self)
            .expect("report serialization cannot fail: all fields are plain data");
        out.push('\n');
        out
    }

    /// Tab-separated line records: each line starts with a record tag
    /// (`test`, `region`, `liml`, `strength_overall`, `strength_per_iv`,
    /// `pleiotropy`, `provenance`). Unbounded endpoints print as `-inf` /
    /// `inf`; absent optional values print as `NA`; an empty region prints
    /// one `region … empty` line.
    pub fn render_tsv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        for t in &self.tests {
            let _ = writeln!(
                out,
                "test\t{}\t{}\t{}\t{}",
                t.test,
                num(t.beta0),
                num(t.statistic),
                num(t.p_value)
            );
        }
        for r in &self.regions {
            if r.empty {
                let _ = writeln!(out, "region\t{}\t{}\tempty", r.test, r.level);
            }
            for [lo, hi] in &r.intervals {
                let _ = writeln!(
                    out,
                    "region\t{}\t{}\t{}\t{}",
                    r.test,
                    r.level,
                    endpoint_text(lo),
                    endpoint_text(hi)
                );
            }
        }
        let _ = writeln!(
            out,
            "liml\t{}\t{}\t{}",
            num(self.liml.beta),
            num(self.liml.min_statistic),
            self.liml.converged
        );
        let _ = writeln!(
            out,
            "strength_overall\t{}\t{}\t{}",
            option_text(self.strength.overall_f),
            num(self.strength.overall_f_mean_approx),
            match self.strength.n_exposure {
                Some(n) => n.to_string(),
                None => "NA".to_string(),
            }
        );
        for iv in &self.strength.per_iv_f {
            let _ = writeln!(out, "strength_per_iv\t{}\t{}", iv.id, num(iv.f));
        }
        match &self.pleiotropy {
            PleiotropyEntry::Test {
                statistic,
                df,
                p_value,
                beta_liml,
            } => {
                let _ = writeln!(
                    out,
                    "pleiotropy\t{}\t{df}\t{}\t{}",
                    num(*statistic),
                    num(*p_value),
                    num(*beta_liml)
                );
            }
            PleiotropyEntry::Unsupported { unsupported } => {
                let _ = writeln!(out, "pleiotropy\tunsupported\t{unsupported}");
            }
        }
        let p = &self.provenance;
        let _ = writeln!(out, "provenance\tinput_sha256\t{}", p.input_sha256);
        if let Some(h) = &p.corr_exposure_sha256 {
            let _ = writeln!(out, "provenance\tcorr_exposure_sha256\t{h}");
        }
        if let Some(h) = &p.corr_outcome_sha256 {
            let _ = writeln!(out, "provenance\tcorr_outcome_sha256\t{h}");
        }
        if let Some(s) = p.seed {
            let _ = writeln!(out, "provenance\tseed\t{s}");
        }
        let _ = writeln!(out, "provenance\tversion\t{}", p.version);
        out
    }
}

fn endpoint_text(e: &Endpoint) -> String {
    match e {
        Endpoint::Finite(v) => num(*v),
        Endpoint::Sentinel(s) => (*s).to_string(),
    }
}

fn option_text(v: Option<f64>) -> String {
    match v {
        Some(v) => num(v),
        None => "NA".to_string(),
    }
}

/// Shortest round-trip text for a float, switching to scientific notation
/// for very small magnitudes so p-values stay legible.
fn num(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-6 {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}
