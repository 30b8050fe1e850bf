//! File ingestion and export: summary-statistics CSV, correlation matrix
//! CSV, and content digests for provenance.
//!
//! CSV dialect: UTF-8, comma delimiter, `.` decimal separator, no thousands
//! separators. The summary file has a mandatory header; matrix files are
//! headerless numeric grids.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use mr_robust::nalgebra::DMatrix;
use mr_robust::numerics::SymMatrix;
use mr_robust::{SummaryData64, SymMatrix64};
use sha2::{Digest, Sha256};

use crate::{classify, CliError};

/// Required summary-file columns, in canonical output order.
const SUMMARY_COLUMNS: [&str; 5] = [
    "id",
    "beta_exposure",
    "se_exposure",
    "beta_outcome",
    "se_outcome",
];

/// A parsed summary file: the statistics plus the instrument ids in file
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSummary {
    /// Summary data with diagonal covariances built from squared standard
    /// errors; instrument index = row order.
    pub data: SummaryData64,
    /// Instrument identifiers, one per row.
    pub ids: Vec<String>,
}

/// Reads and parses a summary-statistics CSV file.
pub fn parse_summary_csv(path: &Path) -> Result<ParsedSummary, CliError> {
    let bytes = read_file(path)?;
    parse_summary_bytes(&bytes).map_err(|e| prefix_path(path, e))
}

/// Parses summary-statistics CSV content.
///
/// The header must contain the columns `id`, `beta_exposure`, `se_exposure`,
/// `beta_outcome`, `se_outcome` (any order, case-insensitive); extra columns
/// are ignored. Rows define instrument order. Standard errors must be
/// positive and finite, effects finite, ids unique.
pub fn parse_summary_bytes(bytes: &[u8]) -> Result<ParsedSummary, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("cannot read the header row: {e}")))?
        .clone();
    let mut positions: HashMap<String, usize> = HashMap::new();
    for (idx, name) in headers.iter().enumerate() {
        positions.entry(name.trim().to_lowercase()).or_insert(idx);
    }
    let mut missing = Vec::new();
    let mut column_index = [0usize; 5];
    for (slot, name) in column_index.iter_mut().zip(SUMMARY_COLUMNS) {
        match positions.get(name) {
            Some(&idx) => *slot = idx,
            None => missing.push(name),
        }
    }
    if !missing.is_empty() {
        return Err(CliError::Input(format!(
            "missing required column(s): {}",
            missing.join(", ")
        )));
    }

    let mut ids = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut beta_exposure = Vec::new();
    let mut se_exposure = Vec::new();
    let mut beta_outcome = Vec::new();
    let mut se_outcome = Vec::new();

    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        let record =
            record.map_err(|e| CliError::Input(format!("row {row}: malformed CSV: {e}")))?;
        let field = |slot: usize| -> Result<&str, CliError> {
            record.get(column_index[slot]).ok_or_else(|| {
                CliError::Input(format!(
                    "row {row}: missing value in column {}",
                    SUMMARY_COLUMNS[slot]
                ))
            })
        };
        let number = |slot: usize| -> Result<f64, CliError> {
            let text = field(slot)?;
            text.parse::<f64>().map_err(|_| {
                CliError::Input(format!(
                    "row {row}, column {}: cannot parse {text:?} as a number",
                    SUMMARY_COLUMNS[slot]
                ))
            })
        };

        let id = field(0)?.to_string();
        if id.is_empty() {
            return Err(CliError::Input(format!("row {row}: empty id")));
        }
        if let Some(first) = seen.insert(id.clone(), row) {
            return Err(CliError::Input(format!(
                "duplicate id {id:?} in rows {first} and {row}"
            )));
        }

        let be = number(1)?;
        let se_e = number(2)?;
        let bo = number(3)?;
        let se_o = number(4)?;
        for (slot, value) in [(1, be), (3, bo)] {
            if !value.is_finite() {
                return Err(CliError::Input(format!(
                    "row {row}: {} must be finite, got {value}",
                    SUMMARY_COLUMNS[slot]
                )));
            }
        }
        for (slot, value) in [(2, se_e), (4, se_o)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(CliError::Input(format!(
                    "row {row}: {} must be a positive finite number, got {value}",
                    SUMMARY_COLUMNS[slot]
                )));
            }
        }

        ids.push(id);
        beta_exposure.push(be);
        se_exposure.push(se_e);
        beta_outcome.push(bo);
        se_outcome.push(se_o);
    }

    if ids.is_empty() {
        return Err(CliError::Input(
            "the file contains a header but no data rows".into(),
        ));
    }

    let data =
        SummaryData64::from_standard_errors(&beta_exposure, &se_exposure, &beta_outcome, &se_outcome)
            .map_err(classify)?;
    Ok(ParsedSummary { data, ids })
}

/// Reads and parses a headerless square correlation/covariance matrix CSV,
/// checking it is `expected_dim` × `expected_dim` and symmetrizing when the
/// largest asymmetry is below 1e-8 (erroring otherwise).
pub fn parse_matrix_csv(path: &Path, expected_dim: usize) -> Result<SymMatrix64, CliError> {
    let bytes = read_file(path)?;
    parse_matrix_bytes(&bytes, expected_dim).map_err(|e| prefix_path(path, e))
}

/// Parses headerless matrix CSV content; see [`parse_matrix_csv`].
pub fn parse_matrix_bytes(bytes: &[u8], expected_dim: usize) -> Result<SymMatrix64, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        let record =
            record.map_err(|e| CliError::Input(format!("row {row}: malformed CSV: {e}")))?;
        let mut values = Vec::with_capacity(record.len());
        for (col_idx, text) in record.iter().enumerate() {
            let value = text.parse::<f64>().map_err(|_| {
                CliError::Input(format!(
                    "row {row}, column {}: cannot parse {text:?} as a number",
                    col_idx + 1
                ))
            })?;
            values.push(value);
        }
        rows.push(values);
    }

    let n = rows.len();
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    if n != expected_dim || rows.iter().any(|r| r.len() != expected_dim) {
        return Err(CliError::Input(format!(
            "matrix is {n}x{width} but {expected_dim} instruments require \
             {expected_dim}x{expected_dim}"
        )));
    }

    let mut worst = (0.0f64, 0usize, 0usize);
    // Indexed loops: the check pairs (i, j) with its transpose (j, i).
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (rows[i][j] - rows[j][i]).abs();
            if gap > worst.0 {
                worst = (gap, i, j);
            }
        }
    }
    if worst.0 >= 1e-8 {
        let (gap, i, j) = worst;
        return Err(CliError::Input(format!(
            "matrix is not symmetric: entries ({}, {}) and ({}, {}) are {} and {} \
             (difference {gap:.3e}, tolerance 1e-8)",
            i + 1,
            j + 1,
            j + 1,
            i + 1,
            rows[i][j],
            rows[j][i],
        )));
    }

    let symmetrized = DMatrix::from_fn(n, n, |i, j| 0.5 * (rows[i][j] + rows[j][i]));
    SymMatrix::new(symmetrized).map_err(classify)
}

/// Renders diagonal-covariance summary data back to the CSV interchange
/// format, using `ids` when given (must match the instrument count) or
/// generated `iv1..ivL` identifiers.
///
/// Numbers are printed in shortest round-trip form, so re-parsing the output
/// recovers the summary data exactly.
pub fn write_summary_csv(
    data: &SummaryData64,
    ids: Option<&[String]>,
) -> Result<String, CliError> {
    if !data.is_diagonal() {
        return Err(CliError::Input(
            "the summary CSV format carries per-instrument standard errors and \
             cannot represent non-diagonal covariance matrices"
                .into(),
        ));
    }
    let l = data.n_instruments();
    if let Some(ids) = ids {
        if ids.len() != l {
            return Err(CliError::Input(format!(
                "{} ids supplied for {l} instruments",
                ids.len()
            )));
        }
    }
    let mut out = String::new();
    out.push_str(&SUMMARY_COLUMNS.join(","));
    out.push('\n');
    for j in 0..l {
        let id = match ids {
            Some(ids) => ids[j].clone(),
            None => format!("iv{}", j + 1),
        };
        if id.contains([',', '"', '\n']) {
            return Err(CliError::Input(format!(
                "id {id:?} contains CSV metacharacters"
            )));
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            id,
            data.beta_exposure()[j],
            data.cov_exposure().get(j, j).sqrt(),
            data.beta_outcome()[j],
            data.cov_outcome().get(j, j).sqrt(),
        );
    }
    Ok(out)
}

/// SHA-256 of raw bytes as lowercase hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// Reads a file, classifying failures as input errors that name the path.
pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub(crate) fn prefix_path(path: &Path, e: CliError) -> CliError {
    let message = format!("{}: {e}", path.display());
    match e {
        CliError::Usage(_) => CliError::Usage(message),
        CliError::Input(_) => CliError::Input(message),
        CliError::Compute(_) => CliError::Compute(message),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const WELL_FORMED: &str = "\
id,beta_exposure,se_exposure,beta_outcome,se_outcome
rs1,0.12,0.01,0.06,0.02
rs2,0.15,0.012,0.07,0.025
";

    #[test]
    fn well_formed_two_row_file_parses() {
        let parsed = parse_summary_bytes(WELL_FORMED.as_bytes()).unwrap();
        assert_eq!(parsed.ids, ["rs1", "rs2"]);
        let d = &parsed.data;
        assert_eq!(d.n_instruments(), 2);
        assert_relative_eq!(d.beta_exposure()[1], 0.15);
        assert_relative_eq!(d.cov_exposure().get(0, 0), 0.01 * 0.01);
        assert_relative_eq!(d.cov_outcome().get(1, 1), 0.025 * 0.025);
        assert!(d.is_diagonal());
    }

    #[test]
    fn header_order_and_case_do_not_matter_and_extras_are_ignored() {
        let shuffled = "\
SE_outcome,Beta_Outcome,note,ID,se_exposure,beta_exposure
0.02,0.06,keep,rs1,0.01,0.12
";
        let parsed = parse_summary_bytes(shuffled.as_bytes()).unwrap();
        assert_eq!(parsed.ids, ["rs1"]);
        assert_relative_eq!(parsed.data.beta_outcome()[0], 0.06);
        assert_relative_eq!(parsed.data.cov_outcome().get(0, 0), 0.0004);
    }

    #[test]
    fn missing_column_is_named() {
        let no_se = "\
id,beta_exposure,se_exposure,beta_outcome
rs1,0.1,0.01,0.05
";
        let err = parse_summary_bytes(no_se.as_bytes()).unwrap_err();
        assert!(matches!(&err, CliError::Input(m) if m.contains("se_outcome")), "{err}");
    }

    #[test]
    fn bad_cells_cite_row_and_column() {
        let non_numeric = "\
id,beta_exposure,se_exposure,beta_outcome,se_outcome
rs1,0.1,0.01,0.05,0.02
rs2,0.1,abc,0.05,0.02
";
        let err = parse_summary_bytes(non_numeric.as_bytes()).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("row 2") && text.contains("se_exposure") && text.contains("abc"));

        let zero_se = "\
id,beta_exposure,se_exposure,beta_outcome,se_outcome
rs1,0.1,0.01,0.05,0.02
rs2,0.1,0.01,0.05,0.02
rs3,0.1,0,0.05,0.02
";
        let err = parse_summary_bytes(zero_se.as_bytes()).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("row 3") && text.contains("se_exposure") && text.contains("positive"));
    }

    #[test]
    fn duplicate_ids_and_empty_files_are_rejected() {
        let dup = "\
id,beta_exposure,se_exposure,beta_outcome,se_outcome
rs1,0.1,0.01,0.05,0.02
rs1,0.2,0.01,0.05,0.02
";
        let err = parse_summary_bytes(dup.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate id \"rs1\""));

        let header_only = "id,beta_exposure,se_exposure,beta_outcome,se_outcome\n";
        assert!(parse_summary_bytes(header_only.as_bytes()).is_err());
    }

    #[test]
    fn matrix_identity_parses_and_shape_errors_name_dimensions() {
        let m = parse_matrix_bytes(b"1,0\n0,1\n", 2).unwrap();
        assert_eq!(m.dim(), 2);
        assert_relative_eq!(m.get(0, 1), 0.0);

        let err = parse_matrix_bytes(b"1,0,0\n0,1,0\n", 2).unwrap_err();
        assert!(err.to_string().contains("2x3"), "{err}");
    }

    #[test]
    fn matrix_asymmetry_beyond_tolerance_is_an_error() {
        let err = parse_matrix_bytes(b"1,0.3\n0.31,1\n", 2).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("not symmetric") && text.contains("0.3") && text.contains("0.31"));

        // Sub-tolerance asymmetry is averaged away.
        let m = parse_matrix_bytes(b"1,0.300000001\n0.3,1\n", 2).unwrap();
        assert_relative_eq!(m.get(0, 1), 0.3000000005, max_relative = 1e-12);
        assert_relative_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn summary_round_trip_is_exact() {
        let parsed = parse_summary_bytes(WELL_FORMED.as_bytes()).unwrap();
        let rendered = write_summary_csv(&parsed.data, Some(&parsed.ids)).unwrap();
        let reparsed = parse_summary_bytes(rendered.as_bytes()).unwrap();
        assert_eq!(parsed, reparsed);

        // Anonymous export generates ids.
        let rendered = write_summary_csv(&parsed.data, None).unwrap();
        let reparsed = parse_summary_bytes(rendered.as_bytes()).unwrap();
        assert_eq!(reparsed.ids, ["iv1", "iv2"]);
        assert_eq!(parsed.data, reparsed.data);
    }

    #[test]
    fn digests_are_stable_and_distinct() {
        let a = sha256_hex(b"hello");
        assert_eq!(
            a,
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
        assert_ne!(a, sha256_hex(b"hello "));
    }
}
