use super::config::{StudyConfig, StudyKind};
use super::report::{flag, num, Check, Report, Table};
use super::solution::guarantee;
use super::{expect_kind, par_map};
use crate::error::Result;
use crate::solver::{integrate, ExistenceEstimate, SolverConfig, Trajectory};

struct Outcome {
    alpha: f64,
    n: usize,
    sup_h1: f64,
    sup_grad: f64,
    halt_time: Option<f64>,
}

fn sup_h1(traj: &Trajectory, until: f64) -> f64 {
    traj.audits
        .iter()
        .filter(|a| a.time <= until + 1e-12)
        .map(|a| a.h1_sq())
        .fold(0.0, f64::max)
}

/// Smallest alpha from which every larger tested box stays bounded.
fn threshold(alphas: &[f64], bounded: &[bool]) -> Option<f64> {
    let mut star = None;
    for (a, ok) in alphas.iter().zip(bounded).rev() {
        if !ok {
            break;
        }
        star = Some(*a);
    }
    star
}

/// Solve on every box up to `T* = factor * T_guaranteed(M)`, with `M` the
/// supremum of `||u||^2_{H^1}` along the reference-box run.
pub fn run_transfer_study(cfg: &StudyConfig, threads: usize) -> Result<Report> {
    expect_kind(cfg, StudyKind::Transfer)?;
    let factor = cfg.transfer.clone().unwrap_or_default().t_star_factor;
    let base: SolverConfig = cfg.solver_config()?.clone();
    let ref_grid = cfg.reference_grid()?;
    let mut report = Report::new(StudyKind::Transfer.name());

    let u0_ref = cfg.initial_data.velocity(&ref_grid)?;
    let (c_a, est) = guarantee(cfg, &[&u0_ref])?;
    let m0 = est[0].m;
    if m0 == 0.0 || c_a == 0.0 {
        report.notes.push("zero initial data: every box is trivially bounded".into());
    }
    let snap = |t: f64| -> f64 {
        let steps = (t / base.dt).round().max(1.0);
        steps * base.dt
    };
    let t_first = if est[0].t_guaranteed.is_finite() {
        snap(factor * est[0].t_guaranteed)
    } else {
        snap(base.t_end)
    };

    let mut ref_cfg = base.clone();
    ref_cfg.t_end = t_first;
    ref_cfg.store_states = false;
    let ref_traj = integrate(&u0_ref.to_spectral()?, &ref_cfg, &mut |_| Ok(()))?;
    drop(u0_ref);
    if let Some(h) = &ref_traj.halt {
        report.checks.push(Check::new(
            "reference_completed",
            false,
            h.last_valid_time,
            t_first,
            format!("reference run halted: {}", h.reason),
        ));
        return Ok(report);
    }
    // the supremum along the run may exceed the initial value, which shortens T*
    let m = sup_h1(&ref_traj, t_first).max(m0);
    let (t_g, t_star) = if m > 0.0 && c_a > 0.0 {
        let g = ExistenceEstimate::from_m(m, c_a)?.t_guaranteed;
        (g, snap(factor * g).min(t_first))
    } else {
        (f64::INFINITY, t_first)
    };
    let bound = 2.0 * m;
    report.checks.push(Check::at_most(
        "reference_bounded",
        sup_h1(&ref_traj, t_star),
        m,
        "reference supremum of ||u||^2_H1 on [0, T*] against M",
    ));

    let mut run_cfg = base.clone();
    run_cfg.t_end = t_star;
    run_cfg.store_states = false;
    let outcomes = par_map(&cfg.alphas, threads, |&alpha| {
        let grid = cfg.grid(alpha)?;
        let u0 = cfg.initial_data.velocity(&grid)?;
        let traj = integrate(&u0.to_spectral()?, &run_cfg, &mut |_| Ok(()))?;
        Ok(Outcome {
            alpha,
            n: grid.n(),
            sup_h1: sup_h1(&traj, t_star),
            sup_grad: traj.audits.iter().map(|a| a.enstrophy).fold(0.0, f64::max),
            halt_time: traj.halt.as_ref().map(|h| h.last_valid_time),
        })
    })?;

    let mut table = Table::new(
        "transfer",
        &["alpha", "n", "t_star", "sup_h1_sq", "sup_grad_sq", "bound", "bounded", "blew_up", "halt_time"],
    );
    let mut ok = Vec::new();
    for o in &outcomes {
        let bounded = o.halt_time.is_none() && o.sup_h1 <= bound;
        ok.push(bounded);
        table.push(vec![
            num(o.alpha),
            o.n.to_string(),
            num(t_star),
            num(o.sup_h1),
            num(o.sup_grad),
            num(bound),
            flag(bounded),
            flag(o.halt_time.is_some()),
            o.halt_time.map(num).unwrap_or_default(),
        ]);
    }
    let star = threshold(&cfg.alphas, &ok);
    report.checks.push(Check::new(
        "alpha_star_found",
        star.is_some(),
        star.unwrap_or(f64::NAN),
        *cfg.alphas.last().unwrap(),
        "smallest alpha from which all tested boxes keep sup ||u||^2_H1 <= 2M",
    ));
    if let Some(s) = star {
        let blown = outcomes
            .iter()
            .filter(|o| o.alpha >= s && o.halt_time.is_some())
            .count();
        report.checks.push(Check::new(
            "no_blowup_from_alpha_star",
            blown == 0,
            blown as f64,
            0.0,
            "halted runs at alpha >= alpha*",
        ));
        report.constants.insert("alpha_star".into(), s);
    }
    report.constants.insert("C_A".into(), c_a);
    report.constants.insert("M".into(), m);
    report.constants.insert("T_guaranteed".into(), t_g);
    report.constants.insert("t_star".into(), t_star);
    report.constants.insert("reference_alpha".into(), ref_grid.alpha());
    report.tables.push(table);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_scans_from_the_top() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(threshold(&a, &[true, true, true, true]), Some(1.0));
        assert_eq!(threshold(&a, &[true, false, true, true]), Some(3.0));
        assert_eq!(threshold(&a, &[true, true, true, false]), None);
    }

    #[test]
    fn unit_factor_is_the_local_interval() {
        let cfg = StudyConfig::from_toml(
            r#"
kind = "transfer"
alphas = [1.0, 1.5]
base_n = 16
reference_alpha = 3.0
[initial_data]
kind = "bump_vorticity"
support_radius = 0.5
amplitude = 20.0
[solver]
dt = 0.0001
t_end = 0.01
audit_every = 1
[transfer]
t_star_factor = 1.0
"#,
        )
        .unwrap();
        let report = run_transfer_study(&cfg, 1).unwrap();
        assert!(report.passed(), "{:?}", report.failures());
        assert_eq!(report.constants["alpha_star"], 1.0);
        let t_g = report.constants["T_guaranteed"];
        assert!((report.constants["t_star"] - t_g).abs() <= 0.5e-4 + 1e-12);
    }

    #[test]
    fn too_small_box_is_rejected() {
        let text = r#"
kind = "transfer"
alphas = [0.5, 1.0]
base_n = 8
[initial_data]
kind = "bump_velocity"
support_radius = 0.5
amplitude = 1.0
[solver]
dt = 0.001
t_end = 0.01
"#;
        assert!(StudyConfig::from_toml(text).unwrap_err().is_config());
    }
}
