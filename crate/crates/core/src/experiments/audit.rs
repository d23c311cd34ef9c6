use std::path::Path;

use super::report::{num, Check, Report, Table};
use crate::error::{Error, Result};
use crate::norms::inequality_report;
use crate::spectral::{read_snapshot, Rank};
use crate::vorticity::curl_identity_report;

const CURL_IDENTITY_TOLERANCE: f64 = 1e-10;

/// Inequality ratios and the curl identity of a stored velocity snapshot.
pub fn run_audit(path: &Path) -> Result<Report> {
    let (u, meta) = read_snapshot(path)?;
    if u.rank() != Rank::Vector {
        return Err(Error::Usage(format!("{} holds a scalar field, not a velocity", path.display())));
    }
    let mut report = Report::new("audit");
    let mut table = Table::new("audit", &["quantity", "value"]);
    table.push(vec!["time".into(), num(meta.time)]);
    table.push(vec!["alpha".into(), num(meta.alpha)]);
    table.push(vec!["n".into(), meta.n.to_string()]);
    let ratios = inequality_report(&u, false)?;
    for (name, v) in ratios.entries() {
        table.push(vec![name.clone(), num(*v)]);
    }
    let curl = curl_identity_report(&u)?;
    for (name, v) in curl.values.entries() {
        table.push(vec![format!("curl_identity_{name}"), num(*v)]);
    }
    report.checks.push(Check::new(
        "finite_samples",
        u.is_finite() && ratios.is_valid(),
        u.max_abs(),
        f64::INFINITY,
        "all samples and norms finite",
    ));
    let rel = curl.values.get("relative_difference").unwrap_or(f64::NAN);
    if curl.has_flag("not_divergence_free") {
        report.notes.push("field is not divergence-free; curl identity not asserted".into());
    } else {
        report.checks.push(Check::at_most(
            "curl_identity",
            rel,
            CURL_IDENTITY_TOLERANCE,
            "| ||grad u|| - ||curl u|| | relative",
        ));
    }
    report.tables.push(table);
    Ok(report)
}
