//! Data ingestion and result serialization.
//!
//! Matrices come in as delimited text with rows as observations; outcomes go
//! out as JSON (with shortest round-trip float formatting, so every numeric
//! field survives a parse bit-exactly) or as a human-readable summary.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::fisher::TestOutcome;
use crate::matrix::SampleMatrix;

/// A delimited text dataset; rows are observations.
#[derive(Debug, Clone)]
pub struct DatasetFile {
    pub path: PathBuf,
    pub delimiter: char,
    pub has_header: bool,
}

impl DatasetFile {
    /// Comma-separated file without a header row.
    pub fn csv(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            delimiter: ',',
            has_header: false,
        }
    }
}

/// Read a rectangular numeric matrix. Every row must have the same number of
/// fields and every field must parse as a finite real.
pub fn read_matrix(file: &DatasetFile) -> Result<SampleMatrix> {
    let text = std::fs::read_to_string(&file.path).map_err(|source| Error::Io {
        path: file.path.display().to_string(),
        source,
    })?;

    let mut width: Option<usize> = None;
    let mut entries: Vec<f64> = Vec::new();
    let mut rows = 0_usize;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if file.has_header && idx == 0 {
            continue;
        }
        if line.trim().is_empty() {
            return Err(Error::Parse {
                line: lineno,
                detail: "blank line inside data".into(),
            });
        }
        let fields: Vec<&str> = line.split(file.delimiter).collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::Parse {
                    line: lineno,
                    detail: format!("expected {w} fields, got {}", fields.len()),
                });
            }
            _ => {}
        }
        for (col, field) in fields.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                detail: format!("column {}: cannot parse '{field}' as a real number", col + 1),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    detail: format!("column {}: value '{field}' is not finite", col + 1),
                });
            }
            entries.push(value);
        }
        rows += 1;
    }

    if rows == 0 {
        return Err(Error::EmptyInput(format!(
            "no data rows in {}",
            file.path.display()
        )));
    }
    SampleMatrix::from_rows(rows, width.unwrap_or(0), &entries)
}

/// Serialize a matrix with 17 significant digits per entry, enough for an
/// exact double round-trip through [`read_matrix`].
pub fn write_matrix(x: &SampleMatrix, delimiter: char) -> String {
    let mut out = String::new();
    for i in 0..x.n() {
        for j in 0..x.p() {
            if j > 0 {
                out.push(delimiter);
            }
            out.push_str(&format!("{:.16e}", x.get(i, j)));
        }
        out.push('\n');
    }
    out
}

/// Output encodings for a test outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Text,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "text" => Ok(OutputFormat::Text),
            other => Err(Error::Config(format!(
                "unknown output format '{other}' (expected json or text)"
            ))),
        }
    }
}

/// Serialize a test outcome.
pub fn write_outcome(outcome: &TestOutcome, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => outcome_json(outcome),
        OutputFormat::Text => outcome_text(outcome),
    }
}

fn outcome_json(outcome: &TestOutcome) -> String {
    let mut map = serde_json::Map::new();
    map.insert("t1".into(), outcome.frob.t1.into());
    map.insert("p1".into(), outcome.frob.p1.into());
    let t2_key = if outcome.m == 1 { "t2" } else { "t2m" };
    map.insert(t2_key.into(), outcome.eigen.t2.into());
    map.insert("p2".into(), outcome.eigen.p2.into());
    map.insert("t_fc".into(), outcome.t_fc.into());
    map.insert("q".into(), outcome.q.into());
    map.insert("alpha".into(), outcome.alpha.into());
    map.insert("m".into(), outcome.m.into());
    map.insert("reject".into(), outcome.reject.into());
    map.insert("b1".into(), outcome.frob.b1.into());
    map.insert("b2".into(), outcome.frob.b2.into());
    map.insert("c".into(), outcome.frob.c.into());
    map.insert("sigma1_hat".into(), outcome.frob.sigma1_hat.into());
    map.insert("mc_draws".into(), outcome.eigen.mc_draws.into());
    map.insert(
        "diagnostics".into(),
        outcome.diagnostics.clone().into(),
    );
    map.insert(
        "versions".into(),
        serde_json::json!({ "covtest": env!("CARGO_PKG_VERSION") }),
    );
    map.insert(
        "seed".into(),
        serde_json::json!({ "seed": outcome.seed.0, "stream": outcome.seed.1 }),
    );
    serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("outcome serializes")
}

fn outcome_text(outcome: &TestOutcome) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "two-sample covariance test (m = {}, alpha = {})\n",
        outcome.m, outcome.alpha
    ));
    out.push_str(&format!(
        "  frobenius:   t1 = {:.6}  p1 = {:.6}\n",
        outcome.frob.t1, outcome.frob.p1
    ));
    let label = if outcome.m == 1 { "t2 " } else { "t2m" };
    out.push_str(&format!(
        "  eigenvalue:  {label} = {:.6}  p2 = {:.6}\n",
        outcome.eigen.t2, outcome.eigen.p2
    ));
    out.push_str(&format!(
        "  fisher:      t_fc = {:.6}  q = {:.6}\n",
        outcome.t_fc, outcome.q
    ));
    out.push_str(&format!(
        "  decision:    {}\n",
        if outcome.reject {
            "REJECT H0"
        } else {
            "FAIL TO REJECT H0"
        }
    ));
    if !outcome.diagnostics.is_empty() {
        out.push_str("  diagnostics:\n");
        for d in &outcome.diagnostics {
            out.push_str(&format!("    - {d}\n"));
        }
    }
    out
}
