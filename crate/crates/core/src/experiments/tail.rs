use super::config::{StudyConfig, StudyKind};
use super::report::{num, Check, Report, Table};
use super::{expect_kind, par_map};
use crate::error::Result;
use crate::norms::{tail_mass, tail_masses};
use crate::solver::{integrate, SolverConfig};

/// Constant `Gamma` in `int_{|x|>R} |u(t)|^2 <= int_{|x|>r} |u0|^2 + Gamma/(R - r)`.
///
/// `Gamma = 2 ||u0|| [ T^{1/2} D^{1/2} + (1 + C_Z) C_6^{3/2} ||u0||^{1/2} T^{1/4} D^{3/4} ]`
/// with `D = int_0^T ||grad u||^2`. The first term bounds `int ||grad u|| ||u||`
/// by Cauchy-Schwarz in time; the second bounds the cubic and pressure terms
/// through `||p|| <= C_Z ||u||_4^2` and `||u||_4^2 <= ||u||^{1/2} ||u||_6^{3/2}`.
pub fn tail_gamma(u0_l2: f64, t: f64, dissipation: f64, c6: f64, cz: f64) -> f64 {
    2.0 * u0_l2
        * (t.sqrt() * dissipation.sqrt()
            + (1.0 + cz) * c6.powf(1.5) * u0_l2.sqrt() * t.powf(0.25) * dissipation.powf(0.75))
}

struct TailRun {
    alpha: f64,
    times: Vec<f64>,
    /// `lhs[i][j]`: tail mass at snapshot `i` beyond radius `j`.
    lhs: Vec<Vec<f64>>,
    tail0: f64,
    u0_l2: f64,
    t_end: f64,
    dissipation: f64,
    c6: f64,
    cz: f64,
}

/// Tail estimate on each box: both sides evaluated at every snapshot and every outer radius.
pub fn run_tail_study(cfg: &StudyConfig, threads: usize) -> Result<Report> {
    expect_kind(cfg, StudyKind::Tail)?;
    let tail = cfg.tail.clone().expect("validated");
    let mut solver: SolverConfig = cfg.solver_config()?.clone();
    solver.store_states = false;
    let r = tail.inner_radius;
    let radii = tail.radii.clone();

    let runs = par_map(&cfg.alphas, threads, |&alpha| {
        let grid = cfg.grid(alpha)?;
        let u0 = cfg.initial_data.velocity(&grid)?;
        let tail0 = tail_mass(&u0, r);
        let mut times = Vec::new();
        let mut lhs = Vec::new();
        let traj = integrate(&u0.to_spectral()?, &solver, &mut |s| {
            times.push(s.time);
            lhs.push(tail_masses(&s.velocity.to_physical(), &radii));
            Ok(())
        })?;
        if let Some(h) = &traj.halt {
            return Err(crate::error::Error::BlowUp {
                last_valid_time: h.last_valid_time,
                reason: h.reason.clone(),
            });
        }
        Ok(TailRun {
            alpha,
            times,
            lhs,
            tail0,
            u0_l2: (2.0 * traj.audits[0].energy).sqrt(),
            t_end: traj.final_time(),
            dissipation: traj.dissipation_integral(),
            c6: traj.max_l6_ratio().unwrap_or(0.0),
            cz: traj.max_cz_ratio().unwrap_or(0.0),
        })
    })?;

    let mut report = Report::new(StudyKind::Tail.name());
    let mut table = Table::new("tail", &["alpha", "t", "R", "lhs", "rhs", "margin", "rhs_over_lhs"]);
    let mut summary = Table::new(
        "tail_constants",
        &["alpha", "u0_l2", "t_end", "dissipation_integral", "c6", "cz", "gamma", "initial_tail"],
    );
    let mut worst = f64::INFINITY;
    for run in &runs {
        let gamma = tail_gamma(run.u0_l2, run.t_end, run.dissipation, run.c6, run.cz);
        summary.push(vec![
            num(run.alpha),
            num(run.u0_l2),
            num(run.t_end),
            num(run.dissipation),
            num(run.c6),
            num(run.cz),
            num(gamma),
            num(run.tail0),
        ]);
        for (t, masses) in run.times.iter().zip(&run.lhs) {
            for (&big_r, &lhs) in radii.iter().zip(masses) {
                let rhs = run.tail0 + gamma / (big_r - r);
                let margin = rhs - lhs;
                worst = worst.min(margin);
                table.push(vec![
                    num(run.alpha),
                    num(*t),
                    num(big_r),
                    num(lhs),
                    num(rhs),
                    num(margin),
                    num(rhs / lhs),
                ]);
            }
        }
        let key = |name: &str| format!("{name}_alpha_{}", run.alpha);
        report.constants.insert(key("C_6"), run.c6);
        report.constants.insert(key("C_Z"), run.cz);
        report.constants.insert(key("gamma"), gamma);
    }
    report.checks.push(Check::new(
        "tail_bound_holds",
        worst >= 0.0,
        worst,
        0.0,
        "smallest rhs - lhs over all snapshots and radii",
    ));
    report.tables.push(table);
    report.tables.push(summary);
    Ok(report)
}
