use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::StudyConfig;
use crate::error::{Error, Result};

/// Schema tag written to every report's metadata.
pub const REPORT_FORMAT: &str = "nsbox-report-v1";

/// One CSV file: a fixed header and rows of preformatted cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_header(name: &str, header: Vec<String>) -> Self {
        Table {
            name: name.to_string(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric values of a column; unparsable cells become NaN.
    pub fn values(&self, name: &str) -> Vec<f64> {
        match self.column(name) {
            Some(c) => self
                .rows
                .iter()
                .map(|r| r[c].parse().unwrap_or(f64::NAN))
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

/// Shortest round-trip form, in scientific notation outside `[1e-4, 1e7)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e7).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn flag(b: bool) -> String {
    b.to_string()
}

/// A machine-readable assertion outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            value,
            threshold,
            detail: detail.into(),
        }
    }

    /// `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check::new(name, value <= threshold, value, threshold, detail)
    }
}

/// Everything a study produces.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    /// Study name: `inversion`, `solution`, `tail`, `transfer` or `audit`.
    pub study: String,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    /// Measured constants such as `C_A`, `C_6`, `C_Z`.
    pub constants: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub wall_time: f64,
}

impl Report {
    pub fn new(study: &str) -> Self {
        Report {
            study: study.to_string(),
            tables: Vec::new(),
            checks: Vec::new(),
            constants: BTreeMap::new(),
            notes: Vec::new(),
            wall_time: 0.0,
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// The checks as a table, written as `checks.csv`.
    pub fn checks_table(&self) -> Table {
        let mut t = Table::new("checks", &["check", "passed", "value", "threshold", "detail"]);
        for c in &self.checks {
            t.push(vec![
                c.name.clone(),
                flag(c.passed),
                num(c.value),
                num(c.threshold),
                c.detail.clone(),
            ]);
        }
        t
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    format: &'a str,
    study: &'a str,
    code_version: &'a str,
    wall_time_seconds: f64,
    passed: bool,
    seed: Option<u64>,
    files: Vec<String>,
    notes: &'a [String],
    constants: &'a BTreeMap<String, f64>,
    config: Option<&'a StudyConfig>,
}

fn write_csv(dir: &Path, table: &Table) -> Result<PathBuf> {
    let path = dir.join(table.file_name());
    let mut w = csv::Writer::from_path(&path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(&path, io),
        other => Error::Data(format!("{other:?}")),
    })?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Write every table, `checks.csv` and `metadata.toml` into `dir`.
pub fn emit_report(
    report: &Report,
    cfg: Option<&StudyConfig>,
    dir: &Path,
    seed: Option<u64>,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for t in &report.tables {
        written.push(write_csv(dir, t)?);
    }
    written.push(write_csv(dir, &report.checks_table())?);
    let meta = Metadata {
        format: REPORT_FORMAT,
        study: &report.study,
        code_version: env!("CARGO_PKG_VERSION"),
        wall_time_seconds: report.wall_time,
        passed: report.passed(),
        seed,
        files: written
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
        notes: &report.notes,
        constants: &report.constants,
        config: cfg,
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Data(e.to_string()))?;
    let path = dir.join("metadata.toml");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}
