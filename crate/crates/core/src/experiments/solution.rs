use super::config::{StudyConfig, StudyKind};
use super::report::{flag, num, Check, Report, Table};
use super::{expect_kind, extension_errors, measured_agmon, par_map, strictly_decreasing, trapezoid};
use crate::error::{Error, Result};
use crate::norms::{tail_mass, NormKind};
use crate::solver::{energy_audit, integrate, ExistenceEstimate, SolverConfig, Trajectory};
use crate::spectral::{Field, SpectralField};

/// One box's trajectory and the initial data it started from.
struct BoxRun {
    alpha: f64,
    traj: Trajectory,
}

fn halted(traj: &Trajectory, alpha: f64) -> Result<()> {
    match &traj.halt {
        Some(h) => Err(Error::BlowUp {
            last_valid_time: h.last_valid_time,
            reason: format!("on Q_{alpha}: {}", h.reason),
        }),
        None => Ok(()),
    }
}

/// Energy and enstrophy diagnostics of one run, rows prefixed by `alpha`.
pub(crate) fn diagnostics_rows(table: &mut Table, alpha: f64, traj: &Trajectory) {
    let energy = energy_audit(traj);
    for (a, e) in traj.audits.iter().zip(&energy) {
        table.push(vec![
            num(alpha),
            num(a.time),
            num(a.energy),
            num(a.enstrophy),
            num(a.laplacian_sq.sqrt()),
            num(a.max_u),
            num(e.values.get("energy_residual").unwrap_or(f64::NAN)),
            num(e.values.get("energy_residual_corrected").unwrap_or(f64::NAN)),
            num(a.pressure_ratio()),
        ]);
    }
}

pub(crate) fn diagnostics_table() -> Table {
    Table::new(
        "diagnostics",
        &[
            "alpha",
            "t",
            "energy",
            "enstrophy",
            "laplacian_norm",
            "max_u",
            "energy_residual",
            "energy_residual_corrected",
            "pressure_ratio",
        ],
    )
}

/// Guaranteed time for each initial field; `C_A` from the config or measured on the same fields.
pub(crate) fn guarantee(cfg: &StudyConfig, fields: &[&Field]) -> Result<(f64, Vec<ExistenceEstimate>)> {
    let c_a = match cfg.agmon_constant {
        Some(c) => c,
        None => measured_agmon(fields)?,
    };
    let mut out = Vec::new();
    for f in fields {
        let m = crate::norms::sobolev_norm(f, 1.0, false)?.powi(2);
        if m == 0.0 {
            out.push(ExistenceEstimate {
                m,
                c_a,
                t_guaranteed: f64::INFINITY,
            });
        } else {
            out.push(ExistenceEstimate::from_m(m, c_a)?);
        }
    }
    Ok((c_a, out))
}

/// Time-dependent convergence of the box solutions towards the reference-box solution.
pub fn run_solution_study(cfg: &StudyConfig, threads: usize) -> Result<Report> {
    expect_kind(cfg, StudyKind::Solution)?;
    let mut solver: SolverConfig = cfg.solver_config()?.clone();
    solver.store_states = true;
    let settings = cfg.solution.clone().unwrap_or_default();
    let ref_grid = cfg.reference_grid()?;
    let mut report = Report::new(StudyKind::Solution.name());

    // spatial norms: the configured list, then the H^{1+s} of each time norm
    let mut norms = cfg.parsed_norms()?;
    let mut time_index = Vec::new();
    for tn in &settings.time_norms {
        let want = NormKind::Sobolev(1.0 + tn.s);
        let k = match norms.iter().position(|n| *n == want) {
            Some(k) => k,
            None => {
                norms.push(want);
                norms.len() - 1
            }
        };
        time_index.push(k);
    }
    let tail_radius = settings.tail_radius.unwrap_or(cfg.alphas[0]);

    let u0_ref = cfg.initial_data.velocity(&ref_grid)?;
    let initial: Vec<Field> = cfg
        .alphas
        .iter()
        .map(|&a| cfg.initial_data.velocity(&cfg.grid(a)?))
        .collect::<Result<_>>()?;
    let mut all: Vec<&Field> = initial.iter().collect();
    all.push(&u0_ref);
    let (c_a, estimates) = guarantee(cfg, &all)?;
    let t_g = estimates
        .iter()
        .map(|e| e.t_guaranteed)
        .fold(f64::INFINITY, f64::min);
    report.constants.insert("C_A".into(), c_a);
    report.constants.insert("T_guaranteed".into(), t_g);
    if solver.t_end > t_g {
        if !cfg.allow_beyond_guarantee {
            return Err(Error::Config(format!(
                "t_end = {} exceeds the guaranteed existence time {t_g:e}; set allow_beyond_guarantee to run anyway",
                solver.t_end
            )));
        }
        report.notes.push(format!(
            "warning: t_end = {} is beyond the guaranteed existence time {t_g:e}",
            solver.t_end
        ));
    }

    let runs = par_map(&cfg.alphas.iter().zip(&initial).collect::<Vec<_>>(), threads, |(a, u0)| {
        let traj = integrate(&u0.to_spectral()?, &solver, &mut |_| Ok(()))?;
        halted(&traj, **a)?;
        Ok(BoxRun { alpha: **a, traj })
    })?;
    drop(initial);

    // reference run; every snapshot is compared with the matching box snapshots
    let mut errors: Vec<Vec<Vec<f64>>> = vec![Vec::new(); runs.len()];
    let mut tails: Vec<Vec<f64>> = vec![Vec::new(); runs.len()];
    let mut times = Vec::new();
    let mut ref_solver = solver.clone();
    ref_solver.store_states = false;
    let mut observer = |state: &crate::solver::State| -> Result<()> {
        let i = times.len();
        times.push(state.time);
        let reference: &SpectralField = &state.velocity;
        for (k, run) in runs.iter().enumerate() {
            let s = run.traj.states.get(i).ok_or_else(|| {
                Error::Data("box and reference snapshots are out of step".into())
            })?;
            if s.step != state.step {
                return Err(Error::Data("box and reference snapshots are out of step".into()));
            }
            let u = s.velocity.to_physical();
            errors[k].push(extension_errors(&u, reference, &norms)?);
            tails[k].push(tail_mass(&u, tail_radius).sqrt());
        }
        Ok(())
    };
    let ref_traj = integrate(&u0_ref.to_spectral()?, &ref_solver, &mut observer)?;
    halted(&ref_traj, ref_grid.alpha())?;
    drop(u0_ref);

    // per-snapshot errors
    let mut header = vec!["alpha".to_string(), "t".to_string()];
    header.extend(norms.iter().map(|n| format!("err_{n}")));
    let mut series = Table::with_header("solution_timeseries", header);
    for (k, run) in runs.iter().enumerate() {
        for (t, e) in times.iter().zip(&errors[k]) {
            let mut row = vec![num(run.alpha), num(*t)];
            row.extend(e.iter().map(|v| num(*v)));
            series.push(row);
        }
    }

    // time-integrated errors
    let mut header = vec!["alpha".to_string(), "n".to_string()];
    header.extend(settings.time_norms.iter().map(|t| t.column()));
    header.extend(["sup_err_L2".to_string(), "sup_tail_L2".to_string(), "max_enstrophy".to_string()]);
    let mut table = Table::with_header("solution", header);
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); settings.time_norms.len()];
    for (k, run) in runs.iter().enumerate() {
        let mut row = vec![num(run.alpha), run.traj.grid.n().to_string()];
        for (j, (tn, &idx)) in settings.time_norms.iter().zip(&time_index).enumerate() {
            let powered: Vec<f64> = errors[k].iter().map(|e| e[idx].powf(tn.r)).collect();
            let v = trapezoid(&times, &powered).powf(1.0 / tn.r);
            columns[j].push(v);
            row.push(num(v));
        }
        let l2 = norms.iter().position(|n| *n == NormKind::Lebesgue(2.0));
        let sup_l2 = match l2 {
            Some(i) => errors[k].iter().map(|e| e[i]).fold(0.0, f64::max),
            None => f64::NAN,
        };
        row.push(num(sup_l2));
        row.push(num(tails[k].iter().cloned().fold(0.0, f64::max)));
        row.push(num(run.traj.audits.iter().map(|a| a.enstrophy).fold(0.0, f64::max)));
        table.push(row);
    }
    for (tn, col) in settings.time_norms.iter().zip(&columns) {
        let finite = col.iter().all(|v| v.is_finite());
        report.checks.push(Check::new(
            &format!("{}_strictly_decreasing", tn.column()),
            finite && strictly_decreasing(col),
            col.last().copied().unwrap_or(0.0),
            col.first().copied().unwrap_or(0.0),
            "error on the largest box (value) against the smallest (threshold)",
        ));
    }
    report.checks.push(Check::new(
        "within_guarantee",
        solver.t_end <= t_g || cfg.allow_beyond_guarantee,
        solver.t_end,
        t_g,
        if solver.t_end <= t_g { "t_end inside the guaranteed interval" } else { "run beyond the guarantee on request" },
    ));

    let mut diag = diagnostics_table();
    for run in &runs {
        diagnostics_rows(&mut diag, run.alpha, &run.traj);
    }
    diagnostics_rows(&mut diag, ref_grid.alpha(), &ref_traj);

    let mut bounded = Table::new("solution_runs", &["alpha", "n", "final_time", "halted"]);
    for run in &runs {
        bounded.push(vec![
            num(run.alpha),
            run.traj.grid.n().to_string(),
            num(run.traj.final_time()),
            flag(run.traj.halt.is_some()),
        ]);
    }
    report.constants.insert("reference_alpha".into(), ref_grid.alpha());
    report.constants.insert("tail_radius".into(), tail_radius);
    report.tables.push(table);
    report.tables.push(series);
    report.tables.push(diag);
    report.tables.push(bounded);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::run_inversion_study;

    const CFG: &str = r#"
kind = "solution"
alphas = [1.0, 2.0]
base_n = 8
reference_alpha = 4.0
norms = ["L2", "H1"]

[initial_data]
kind = "bump_vorticity"
support_radius = 0.6
amplitude = 1.0

[solver]
dt = 0.002
t_end = 0.01
snapshot_every = 1
"#;

    #[test]
    fn first_row_matches_inversion() {
        let cfg = StudyConfig::from_toml(CFG).unwrap();
        let report = run_solution_study(&cfg, 1).unwrap();
        let mut inv = cfg.clone();
        inv.kind = StudyKind::Inversion;
        let inversion = run_inversion_study(&inv, 1).unwrap();
        let series = report.table("solution_timeseries").unwrap();
        let t = series.values("t");
        let h1 = series.values("err_H1");
        let expect = inversion.table("inversion").unwrap().values("err_H1");
        let firsts: Vec<f64> = t
            .iter()
            .zip(&h1)
            .filter(|(t, _)| **t == 0.0)
            .map(|(_, e)| *e)
            .collect();
        assert_eq!(firsts.len(), 2);
        for (a, b) in firsts.iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-10 * b, "{a} vs {b}");
        }
        let table = report.table("solution").unwrap();
        assert_eq!(table.header[2], "err_L2t_H1");
        assert_eq!(table.header[3], "err_L4t_H1.5");
        assert!(table.values("err_L4t_H1.5").iter().all(|v| v.is_finite()));
    }

    #[test]
    fn refuses_to_run_past_the_guarantee() {
        let text = CFG.replace("t_end = 0.01", "t_end = 0.01\nviscosity = 1.0")
            .replace("reference_alpha = 4.0", "reference_alpha = 4.0\nagmon_constant = 100.0");
        let cfg = StudyConfig::from_toml(&text).unwrap();
        assert!(run_solution_study(&cfg, 1).unwrap_err().is_config());
    }
}
