use super::config::{StudyConfig, StudyKind};
use super::report::{num, Check, Report, Table};
use super::{expect_kind, extension_errors, lattice_value, nearest_lattice_point, par_map, strictly_decreasing};
use crate::error::Result;
use crate::spectral::gradient_norm;
use crate::vorticity::{biot_savart_r3, curl_inv_periodic, curl_inv_spectral};

/// Tolerance on `| ||grad u|| - ||omega|| | / ||omega||` per box.
const GRADIENT_TOLERANCE: f64 = 1e-10;
/// Largest admitted relative gap between the reference box and the whole-space sum.
const BIOT_SAVART_TOLERANCE: f64 = 0.05;

/// Query points for the whole-space cross-check, as multiples of the data support radius.
const QUERY_SCALES: [[f64; 3]; 4] = [[2.0, 0.0, 0.0], [0.0, 0.0, 2.0], [2.0, 2.0, 0.0], [0.0, 3.0, 3.0]];

struct Row {
    alpha: f64,
    errors: Vec<f64>,
    grad: f64,
    omega: f64,
}

/// Periodic curl inversion on every box, extended to the reference box and
/// compared with the inversion there.
pub fn run_inversion_study(cfg: &StudyConfig, threads: usize) -> Result<Report> {
    expect_kind(cfg, StudyKind::Inversion)?;
    let norms = cfg.parsed_norms()?;
    let ref_grid = cfg.reference_grid()?;
    let mut report = Report::new(StudyKind::Inversion.name());

    let omega_ref = cfg.initial_data.vorticity(&ref_grid)?;
    let omega_norm_ref = omega_ref.omega().to_spectral()?.l2_norm();

    // whole-space cross-check of the reference inversion
    let mut bs = Table::new(
        "biot_savart",
        &["x", "y", "z", "u_ref_x", "u_ref_y", "u_ref_z", "bs_x", "bs_y", "bs_z", "rel_diff"],
    );
    let support = omega_ref.support_radius();
    let queries: Vec<[usize; 3]> = if omega_norm_ref > 0.0 {
        QUERY_SCALES
            .iter()
            .map(|q| q.map(|v| v * support))
            .filter(|q| q.iter().all(|v| v.abs() < ref_grid.alpha()))
            .map(|q| nearest_lattice_point(&ref_grid, q))
            .collect()
    } else {
        Vec::new()
    };
    let points: Vec<[f64; 3]> = queries
        .iter()
        .map(|p| [ref_grid.coord(p[0]), ref_grid.coord(p[1]), ref_grid.coord(p[2])])
        .collect();
    let samples = biot_savart_r3(&omega_ref, &points);

    let u_ref = curl_inv_spectral(&omega_ref.into_field().to_spectral()?)?;
    let mut worst_bs = 0.0f64;
    for (q, s) in queries.iter().zip(&samples) {
        let v = lattice_value(&u_ref, *q);
        let gap = ((v[0] - s.velocity[0]).powi(2)
            + (v[1] - s.velocity[1]).powi(2)
            + (v[2] - s.velocity[2]).powi(2))
        .sqrt();
        let size = s.velocity.iter().map(|c| c * c).sum::<f64>().sqrt();
        let rel = if size > 0.0 { gap / size } else { gap };
        worst_bs = worst_bs.max(rel);
        let mut row: Vec<String> = s.point.iter().map(|c| num(*c)).collect();
        row.extend(v.iter().map(|c| num(*c)));
        row.extend(s.velocity.iter().map(|c| num(*c)));
        row.push(num(rel));
        bs.push(row);
    }

    let rows = par_map(&cfg.alphas, threads, |&alpha| {
        let grid = cfg.grid(alpha)?;
        let omega = cfg.initial_data.vorticity(&grid)?;
        let u = curl_inv_periodic(&omega)?;
        let grad = gradient_norm(&u.to_spectral()?);
        let omega_l2 = omega.omega().to_spectral()?.l2_norm();
        let errors = extension_errors(&u, &u_ref, &norms)?;
        Ok(Row {
            alpha,
            errors,
            grad,
            omega: omega_l2,
        })
    })?;

    let mut header = vec!["alpha".to_string()];
    header.extend(norms.iter().map(|n| format!("err_{n}")));
    header.push("grad_norm".into());
    header.push("omega_norm".into());
    let mut table = Table::with_header("inversion", header);
    let mut worst_grad = 0.0f64;
    for r in &rows {
        let mut row = vec![num(r.alpha)];
        row.extend(r.errors.iter().map(|e| num(*e)));
        row.push(num(r.grad));
        row.push(num(r.omega));
        table.push(row);
        if r.omega > 0.0 {
            worst_grad = worst_grad.max((r.grad - r.omega).abs() / r.omega);
        } else {
            worst_grad = worst_grad.max(r.grad);
        }
    }

    report.checks.push(Check::at_most(
        "grad_norm_equals_omega_norm",
        worst_grad,
        GRADIENT_TOLERANCE,
        "largest relative gap between the velocity gradient and vorticity norms",
    ));
    for (k, n) in norms.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r.errors[k]).collect();
        let ok = col.iter().all(|e| e.is_finite()) && strictly_decreasing(&col);
        report.checks.push(Check::new(
            &format!("err_{n}_strictly_decreasing"),
            ok,
            col.last().copied().unwrap_or(0.0),
            col.first().copied().unwrap_or(0.0),
            "error on the largest box (value) against the smallest (threshold)",
        ));
    }
    // halving rate on doubling boxes, in the first Sobolev norm requested
    if let Some(k) = norms.iter().position(|n| !matches!(n, crate::norms::NormKind::Lebesgue(_))) {
        let mut worst: Option<f64> = None;
        for w in rows.windows(2) {
            if (w[1].alpha - 2.0 * w[0].alpha).abs() < 1e-12 && w[0].errors[k] > 0.0 {
                let ratio = w[1].errors[k] / w[0].errors[k];
                worst = Some(worst.map_or(ratio, |v: f64| v.max(ratio)));
            }
        }
        if let Some(ratio) = worst {
            report.checks.push(Check::at_most(
                &format!("err_{}_doubling_ratio", norms[k]),
                ratio,
                0.5,
                "largest E(2 alpha) / E(alpha)",
            ));
        }
    }
    if !queries.is_empty() {
        report.checks.push(Check::at_most(
            "biot_savart_agreement",
            worst_bs,
            BIOT_SAVART_TOLERANCE,
            "reference-box velocity against the whole-space Biot-Savart sum",
        ));
    }
    report.constants.insert("reference_alpha".into(), ref_grid.alpha());
    report.constants.insert("spacing".into(), ref_grid.h());
    report.tables.push(table);
    report.tables.push(bs);
    Ok(report)
}
