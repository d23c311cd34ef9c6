//! Domain-limit studies driven by a TOML configuration, and their CSV reports.
//!
//! Every study works on a family of boxes `Q_alpha` sharing one lattice
//! spacing, and compares against a reference box `Q_beta` standing in for the
//! whole space. Fields on the smaller boxes are carried over to `Q_beta` with
//! the smooth extension before any error is measured.

mod audit;
mod config;
mod inversion;
mod report;
mod solution;
mod tail;
mod transfer;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::extension::{extend_field, make_cutoff};
use crate::norms::{inequality_report, NormKind, AGMON_RATIO};
use crate::spectral::{BoxGrid, Field, SpectralField};

pub use audit::run_audit;
pub use config::{
    InitialData, SolutionSettings, StudyConfig, StudyKind, TailSettings, TimeNorm,
    TransferSettings,
};
pub use inversion::run_inversion_study;
pub use report::{emit_report, flag, num, Check, Report, Table, REPORT_FORMAT};
pub use solution::run_solution_study;
pub use tail::{run_tail_study, tail_gamma};
pub use transfer::run_transfer_study;

/// Run whichever study `cfg.kind` names, timing it.
pub fn run_study(cfg: &StudyConfig, threads: usize) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = match cfg.kind {
        StudyKind::Inversion => run_inversion_study(cfg, threads),
        StudyKind::Solution => run_solution_study(cfg, threads),
        StudyKind::Tail => run_tail_study(cfg, threads),
        StudyKind::Transfer => run_transfer_study(cfg, threads),
    }?;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

fn expect_kind(cfg: &StudyConfig, kind: StudyKind) -> Result<()> {
    if cfg.kind != kind {
        return Err(Error::Config(format!(
            "configuration describes a {} study, not {}",
            cfg.kind.name(),
            kind.name()
        )));
    }
    cfg.validate()
}

/// Map `f` over `items` on up to `threads` workers; results keep the input order.
pub(crate) fn par_map<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<R>>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads.min(items.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot is filled"))
        .collect()
}

/// Errors of `psi_alpha * u_alpha` against a spectral reference on `Q_beta`, one per norm.
///
/// Works one component at a time so that only a single extra spectral
/// component of the reference size is alive.
pub(crate) fn extension_errors(
    u: &Field,
    reference: &SpectralField,
    norms: &[NormKind],
) -> Result<Vec<f64>> {
    let target = *reference.grid();
    let cutoff = make_cutoff(u.grid().alpha())?;
    let extended = extend_field(u, &target, &cutoff)?;
    let mut sums = vec![0.0; norms.len()];
    for (c, comp) in extended.into_components().into_iter().enumerate() {
        let mut diff = Field::from_components(target, vec![comp])?.to_spectral()?;
        for (d, r) in diff.component_mut(0).iter_mut().zip(reference.component(c)) {
            *d -= *r;
        }
        for (s, n) in sums.iter_mut().zip(norms) {
            *s += n.evaluate_spectral(&diff)?.powi(2);
        }
    }
    Ok(sums.into_iter().map(f64::sqrt).collect())
}

/// Largest empirical Agmon ratio over the given fields; zero when all are degenerate.
pub(crate) fn measured_agmon(fields: &[&Field]) -> Result<f64> {
    let mut best = 0.0f64;
    for f in fields {
        if let Some(r) = inequality_report(f, true)?.get(AGMON_RATIO) {
            best = best.max(r);
        }
    }
    Ok(best)
}

/// Value of a spectral field at a lattice point, by direct Fourier summation.
pub(crate) fn lattice_value(f: &SpectralField, point: [usize; 3]) -> Vec<f64> {
    let grid = f.grid();
    let n = grid.n();
    let phases: Vec<Vec<Complex64>> = point
        .iter()
        .map(|&j| {
            (0..n)
                .map(|i| {
                    let theta = 2.0 * std::f64::consts::PI * ((i * j) % n) as f64 / n as f64;
                    Complex64::from_polar(1.0, theta)
                })
                .collect()
        })
        .collect();
    f.components()
        .iter()
        .map(|comp| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                for j in 0..n {
                    let pjk = phases[1][j] * phases[2][k];
                    let row = &comp[grid.index(0, j, k)..grid.index(0, j, k) + n];
                    let mut inner = Complex64::new(0.0, 0.0);
                    for (c, p) in row.iter().zip(&phases[0]) {
                        inner += c * p;
                    }
                    acc += inner * pjk;
                }
            }
            acc.re
        })
        .collect()
}

/// Lattice index of the point nearest to `x`.
pub(crate) fn nearest_lattice_point(grid: &BoxGrid, x: [f64; 3]) -> [usize; 3] {
    let h = grid.h();
    let n = grid.n() as i64;
    let mut out = [0; 3];
    for (o, v) in out.iter_mut().zip(x) {
        *o = (((v + grid.alpha()) / h).round() as i64).rem_euclid(n) as usize;
    }
    out
}

/// Whether `values` strictly decrease; an all-zero column counts as decreasing.
pub(crate) fn strictly_decreasing(values: &[f64]) -> bool {
    if values.iter().all(|v| *v == 0.0) {
        return true;
    }
    values.windows(2).all(|w| w[1] < w[0])
}

/// Trapezoid of `values` over `times`.
pub(crate) fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}
