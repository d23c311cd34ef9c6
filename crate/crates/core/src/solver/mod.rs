//! Strong-solution time stepping on periodic boxes.
//!
//! The state is kept in Fourier space. Each step is an integrating-factor
//! (Lawson) RK4 step: the viscous semigroup is applied exactly and the
//! projected nonlinear term is advanced with classical RK4 weights.

mod audit;
mod nonlinear;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{DiagnosticsRecord, NormReport};
use crate::spectral::{fft_plan, BoxGrid, Field, Rank, SpectralField, Wavenumbers};

pub use audit::{
    energy_audit, enstrophy_audit, existence_time, pressure_solve, EnstrophyCheck,
    ExistenceEstimate, PressureSolution,
};
pub use nonlinear::NonlinearForm;
pub(crate) use nonlinear::{Evaluation, Nonlinear};

fn default_true() -> bool {
    true
}
fn default_snapshot_every() -> usize {
    10
}
fn default_audit_every() -> usize {
    1
}
fn default_viscosity() -> f64 {
    1.0
}
fn default_cfl() -> f64 {
    0.5
}
fn default_blowup_velocity() -> f64 {
    1e6
}
fn default_blowup_enstrophy() -> f64 {
    1e8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_true")]
    pub dealias: bool,
    /// Store a snapshot every this many steps (0 disables the cadence).
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    /// Extra snapshot times, snapped to the nearest step.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_audit_every")]
    pub audit_every: usize,
    #[serde(default)]
    pub nonlinear: NonlinearForm,
    #[serde(default = "default_viscosity")]
    pub viscosity: f64,
    /// Upper bound on `max|u| dt / h`.
    #[serde(default = "default_cfl")]
    pub cfl_limit: f64,
    #[serde(default = "default_blowup_velocity")]
    pub blowup_velocity: f64,
    #[serde(default = "default_blowup_enstrophy")]
    pub blowup_enstrophy: f64,
    /// Keep snapshot states in the trajectory (observers see them either way).
    #[serde(default = "default_true")]
    pub store_states: bool,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        SolverConfig {
            dt,
            t_end,
            dealias: true,
            snapshot_every: default_snapshot_every(),
            snapshot_times: Vec::new(),
            audit_every: default_audit_every(),
            nonlinear: NonlinearForm::Convective,
            viscosity: default_viscosity(),
            cfl_limit: default_cfl(),
            blowup_velocity: default_blowup_velocity(),
            blowup_enstrophy: default_blowup_enstrophy(),
            store_states: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("final time must be nonnegative, got {}", self.t_end)));
        }
        if !(self.viscosity >= 0.0 && self.viscosity.is_finite()) {
            return Err(Error::Config("viscosity must be nonnegative".into()));
        }
        if !(self.cfl_limit > 0.0) {
            return Err(Error::Config("CFL limit must be positive".into()));
        }
        if self.audit_every == 0 {
            return Err(Error::Config("audit cadence must be at least one step".into()));
        }
        if self.snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Config("snapshot times must be nonnegative".into()));
        }
        Ok(())
    }

    /// `round(t_end / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    fn snapshot_steps(&self) -> Vec<usize> {
        let n = self.steps();
        let mut steps = vec![0, n];
        if self.snapshot_every > 0 {
            steps.extend((0..=n).step_by(self.snapshot_every));
        }
        for t in &self.snapshot_times {
            steps.push(((t / self.dt).round() as usize).min(n));
        }
        steps.sort_unstable();
        steps.dedup();
        steps
    }
}

/// A stored velocity state.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub step: usize,
    pub time: f64,
    pub velocity: SpectralField,
}

/// Diagnostics of one state, all from Fourier coefficients except the lattice norms.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditPoint {
    pub step: usize,
    pub time: f64,
    /// `||u||^2 / 2`.
    pub energy: f64,
    /// `||grad u||^2`.
    pub enstrophy: f64,
    /// `||lap u||^2`.
    pub laplacian_sq: f64,
    /// `d/dt ||grad u||^2`, exact for the semi-discrete system.
    pub enstrophy_rate: f64,
    /// `(u, N(u))`, zero for an exactly skew nonlinearity.
    pub nonlinear_work: f64,
    /// `nu int ||grad u||^2` since the previous audit point (zero at the first),
    /// summed over modes with [`mode_integral`].
    pub dissipation: f64,
    pub mean: [f64; 3],
    /// Lattice `max |u|`.
    pub max_u: f64,
    pub l4: f64,
    pub l6: f64,
    pub pressure_l2: f64,
    pub pressure_gradient: f64,
    pub convective_norm: f64,
    pub divergence: f64,
}

impl AuditPoint {
    /// `||grad p|| / ||(u . grad) u||`, zero when the product vanishes.
    pub fn pressure_ratio(&self) -> f64 {
        if self.convective_norm == 0.0 {
            0.0
        } else {
            self.pressure_gradient / self.convective_norm
        }
    }

    /// Empirical Agmon ratio; `None` for a state with vanishing derivatives.
    pub fn agmon_ratio(&self) -> Option<f64> {
        let d = self.enstrophy.sqrt() * self.laplacian_sq.sqrt();
        (d > 0.0).then(|| self.max_u / d.sqrt())
    }

    pub fn l6_ratio(&self) -> Option<f64> {
        (self.enstrophy > 0.0).then(|| self.l6 / self.enstrophy.sqrt())
    }

    /// `||p|| / ||u||_4^2`.
    pub fn cz_ratio(&self) -> Option<f64> {
        (self.l4 > 0.0).then(|| self.pressure_l2 / (self.l4 * self.l4))
    }

    /// `||u||^2 + ||grad u||^2`.
    pub fn h1_sq(&self) -> f64 {
        2.0 * self.energy + self.enstrophy
    }

    pub fn to_record(&self) -> DiagnosticsRecord {
        let mut v = NormReport::new();
        v.insert("energy", self.energy);
        v.insert("enstrophy", self.enstrophy);
        v.insert("laplacian_norm", self.laplacian_sq.sqrt());
        v.insert("max_u", self.max_u);
        v.insert("pressure_ratio", self.pressure_ratio());
        DiagnosticsRecord::new(self.time, v)
    }
}

/// Why a run stopped before `t_end`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halt {
    pub last_valid_time: f64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: BoxGrid,
    pub config: SolverConfig,
    pub states: Vec<State>,
    pub audits: Vec<AuditPoint>,
    pub halt: Option<Halt>,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.audits.last().map(|a| a.time).unwrap_or(0.0)
    }

    pub fn max_agmon_ratio(&self) -> Option<f64> {
        self.audits.iter().filter_map(|a| a.agmon_ratio()).reduce(f64::max)
    }

    pub fn max_l6_ratio(&self) -> Option<f64> {
        self.audits.iter().filter_map(|a| a.l6_ratio()).reduce(f64::max)
    }

    pub fn max_cz_ratio(&self) -> Option<f64> {
        self.audits.iter().filter_map(|a| a.cz_ratio()).reduce(f64::max)
    }

    /// Trapezoid of `||grad u||^2` over the audit points.
    pub fn dissipation_integral(&self) -> f64 {
        self.audits
            .windows(2)
            .map(|w| 0.5 * (w[1].time - w[0].time) * (w[0].enstrophy + w[1].enstrophy))
            .sum()
    }
}

/// Per-mode viscous factors and the nonlinear evaluator for one grid.
pub(crate) struct Stepper {
    pub nonlinear: Nonlinear,
    /// `exp(-nu |k|^2 dt/2)`.
    half: Vec<f64>,
    /// `exp(-nu |k|^2 dt)`.
    full: Vec<f64>,
    ksq: Vec<f64>,
    dt: f64,
    viscosity: f64,
}

impl Stepper {
    pub fn new(grid: BoxGrid, cfg: &SolverConfig) -> Self {
        let ksq = grid.k_squared();
        let nu = cfg.viscosity;
        let half = ksq.iter().map(|k| (-nu * k * 0.5 * cfg.dt).exp()).collect();
        let full = ksq.iter().map(|k| (-nu * k * cfg.dt).exp()).collect();
        Stepper {
            nonlinear: Nonlinear::new(grid, cfg.dealias, cfg.nonlinear),
            half,
            full,
            ksq,
            dt: cfg.dt,
            viscosity: nu,
        }
    }

    /// Advance `u` by one step given `k1 = N(u)`.
    pub fn advance(&self, u: &mut Vec<Vec<Complex64>>, k1: &[Vec<Complex64>]) {
        let h = self.dt;
        let (e1, e2) = (&self.half, &self.full);
        let len = e1.len();
        let mut acc: Vec<Vec<Complex64>> = (0..3)
            .map(|c| (0..len).map(|i| e2[i] * (u[c][i] + k1[c][i] * (h / 6.0))).collect())
            .collect();
        let mut stage: Vec<Vec<Complex64>> = (0..3)
            .map(|c| (0..len).map(|i| e1[i] * (u[c][i] + k1[c][i] * (0.5 * h))).collect())
            .collect();
        let k2 = self.nonlinear.evaluate(&stage, false).rhs;
        for c in 0..3 {
            for i in 0..len {
                acc[c][i] += k2[c][i] * (e1[i] * h / 3.0);
                stage[c][i] = e1[i] * u[c][i] + k2[c][i] * (0.5 * h);
            }
        }
        drop(k2);
        let k3 = self.nonlinear.evaluate(&stage, false).rhs;
        for c in 0..3 {
            for i in 0..len {
                acc[c][i] += k3[c][i] * (e1[i] * h / 3.0);
                stage[c][i] = e2[i] * u[c][i] + k3[c][i] * (e1[i] * h);
            }
        }
        drop(k3);
        let k4 = self.nonlinear.evaluate(&stage, false).rhs;
        for c in 0..3 {
            for i in 0..len {
                acc[c][i] += k4[c][i] * (h / 6.0);
            }
        }
        *u = acc;
    }

    pub fn enstrophy(&self, u: &[Vec<Complex64>], volume: f64) -> f64 {
        let mut acc = 0.0;
        for comp in u {
            for (c, k) in comp.iter().zip(&self.ksq) {
                acc += k * c.norm_sqr();
            }
        }
        acc * volume
    }

    /// Per-mode `|u_m|^2` and `2 Re(conj(u_m) . N_m)`, summed over components.
    fn mode_budget(&self, u: &[Vec<Complex64>], rhs: &[Vec<Complex64>]) -> ModeBudget {
        let len = self.ksq.len();
        let mut q = vec![0.0; len];
        let mut n = vec![0.0; len];
        for c in 0..3 {
            for i in 0..len {
                q[i] += u[c][i].norm_sqr();
                n[i] += 2.0 * (u[c][i].conj() * rhs[c][i]).re;
            }
        }
        ModeBudget { q, n }
    }

    /// `nu int_a^b ||grad u||^2` from the mode budgets at both ends.
    fn interval_dissipation(&self, a: &ModeBudget, b: &ModeBudget, delta: f64) -> f64 {
        let nu = self.viscosity;
        let mut acc = 0.0;
        for (i, k) in self.ksq.iter().enumerate() {
            if *k == 0.0 {
                continue;
            }
            acc += k * mode_integral(a.q[i], b.q[i], a.n[i], b.n[i], 2.0 * nu * k, delta);
        }
        nu * acc * self.nonlinear.grid().volume()
    }

    /// Diagnostics of `u` given its evaluation with the product kept.
    pub fn audit(&self, step: usize, time: f64, u: &[Vec<Complex64>], eval: &Evaluation) -> AuditPoint {
        let grid = *self.nonlinear.grid();
        let vol = grid.volume();
        let mut energy = 0.0;
        let mut ens = 0.0;
        let mut lap = 0.0;
        let mut rate = 0.0;
        let mut work = 0.0;
        for c in 0..3 {
            for (i, k) in self.ksq.iter().enumerate() {
                let a = u[c][i].norm_sqr();
                let cross = (u[c][i].conj() * eval.rhs[c][i]).re;
                energy += a;
                ens += k * a;
                lap += k * k * a;
                rate += k * cross;
                work += cross;
            }
        }
        let nu = self.viscosity;
        let enstrophy_rate = 2.0 * vol * (rate - nu * lap);

        let wn = Wavenumbers::new(&grid);
        let (mut grad_p, mut p_sq, mut conv_sq, mut div_sq, mut grad_u) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let product = eval.product.as_ref().expect("audit needs the product");
        for i in 0..grid.len() {
            let k = wn.k(i);
            let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let c = [product[0][i], product[1][i], product[2][i]];
            conv_sq += c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr();
            let d = u[0][i] * k[0] + u[1][i] * k[1] + u[2][i] * k[2];
            div_sq += d.norm_sqr();
            grad_u += kk * (u[0][i].norm_sqr() + u[1][i].norm_sqr() + u[2][i].norm_sqr());
            if kk > 0.0 {
                let kc = c[0] * k[0] + c[1] * k[1] + c[2] * k[2];
                grad_p += kc.norm_sqr() / kk;
                p_sq += kc.norm_sqr() / (kk * kk);
            }
        }
        let physical = fft_plan(grid.n()).inverse_real_many(&[&u[0], &u[1], &u[2]]);
        let (mut max_sq, mut s4, mut s6) = (0.0f64, 0.0, 0.0);
        for i in 0..grid.len() {
            let s = physical[0][i].powi(2) + physical[1][i].powi(2) + physical[2][i].powi(2);
            max_sq = max_sq.max(s);
            s4 += s * s;
            s6 += s * s * s;
        }
        let cell = grid.cell_volume();
        AuditPoint {
            step,
            time,
            energy: 0.5 * vol * energy,
            enstrophy: vol * ens,
            laplacian_sq: vol * lap,
            enstrophy_rate,
            nonlinear_work: vol * work,
            dissipation: 0.0,
            mean: [u[0][0].re, u[1][0].re, u[2][0].re],
            max_u: max_sq.sqrt(),
            l4: (s4 * cell).powf(0.25),
            l6: (s6 * cell).powf(1.0 / 6.0),
            pressure_l2: (vol * p_sq).sqrt(),
            pressure_gradient: (vol * grad_p).sqrt(),
            convective_norm: (vol * conv_sq).sqrt(),
            divergence: if grad_u == 0.0 { div_sq.sqrt() } else { (div_sq / grad_u).sqrt() },
        }
    }
}

struct ModeBudget {
    q: Vec<f64>,
    n: Vec<f64>,
}

/// `int_0^1 exp(-x t) H(t) dt` for the Hermite basis functions `H00` and `H10`.
fn hermite_moments(x: f64) -> (f64, f64) {
    // phi_j(x) = int_0^1 exp(-x t) t^j dt = sum_k (-x)^k / (k! (j + k + 1)); only used for |x| < 1
    let mut phi = [0.0; 4];
    for (j, p) in phi.iter_mut().enumerate() {
        let mut term = 1.0;
        for k in 0..25 {
            *p += term / (j + k + 1) as f64;
            term *= -x / (k + 1) as f64;
        }
    }
    (phi[0] - 3.0 * phi[2] + 2.0 * phi[3], phi[1] - 2.0 * phi[2] + phi[3])
}

/// Below this `lambda delta` the exponential-plus-quadratic fit is ill-conditioned.
const STIFF_MODE: f64 = 0.05;

/// `int_a^b q` for one mode with `q' = -lambda q + n`, from `q` and `n` at both ends.
///
/// Stiff modes (`x = lambda delta >= 0.05`) fit `q = A exp(-lambda s) + P(s)`
/// with `P` quadratic to the four endpoint values, which is exact both for
/// free viscous decay and for a smooth forced state. Slow modes replace
/// `exp(lambda s) q` by its cubic Hermite interpolant and integrate it against
/// `exp(-lambda s)`; at `x = 0` this is the trapezoid with endpoint-derivative correction.
pub fn mode_integral(q_a: f64, q_b: f64, n_a: f64, n_b: f64, lambda: f64, delta: f64) -> f64 {
    let x = lambda * delta;
    if x < STIFF_MODE {
        let (a0, a1) = hermite_moments(x);
        let (b0, b1) = hermite_moments(-x);
        return delta * (q_a * a0 + delta * n_a * a1 + q_b * b0 - delta * n_b * b1);
    }
    let e = (-x).exp();
    let g = (1.0 - 0.5 * x) - e * (1.0 + 0.5 * x);
    let amp = (q_a * (1.0 - 0.5 * x) - q_b * (1.0 + 0.5 * x) + 0.5 * delta * (n_a + n_b)) / g;
    let p0 = q_a - amp;
    let p1 = n_a - lambda * p0;
    let p2 = (n_b - lambda * (q_b - amp * e) - p1) / (2.0 * delta);
    amp * (1.0 - e) / lambda + delta * (p0 + delta * (p1 / 2.0 + delta * p2 / 3.0))
}

fn check_initial(u0: &SpectralField) -> Result<()> {
    if u0.rank() != Rank::Vector {
        return Err(Error::Usage("initial velocity must be a vector field".into()));
    }
    if u0.components().iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Data("initial velocity contains non-finite values".into()));
    }
    let div = crate::spectral::relative_divergence(u0)?;
    if div > 1e-10 {
        return Err(Error::Data(format!("initial velocity is not divergence-free ({div:e})")));
    }
    Ok(())
}

/// Integrate from `u0`, calling `observer` on every snapshot state.
///
/// Blow-up is recorded in [`Trajectory::halt`] rather than returned as an error;
/// a CFL violation is an error carrying a suggested time step.
pub fn integrate(
    u0: &SpectralField,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&State) -> Result<()>,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_initial(u0)?;
    let grid = *u0.grid();
    let stepper = Stepper::new(grid, cfg);
    let snapshots = cfg.snapshot_steps();
    let n_steps = cfg.steps();
    let h = grid.h();
    let vol = grid.volume();
    let mut u = u0.components().to_vec();
    let mut traj = Trajectory {
        grid,
        config: cfg.clone(),
        states: Vec::new(),
        audits: Vec::new(),
        halt: None,
    };
    let mut snap_iter = snapshots.iter().peekable();
    let mut budget: Option<(f64, ModeBudget)> = None;
    let mut step = 0;
    loop {
        let time = step as f64 * cfg.dt;
        let audit_now = step % cfg.audit_every == 0 || step == n_steps;
        let eval = stepper.nonlinear.evaluate(&u, audit_now);
        let enstrophy = stepper.enstrophy(&u, vol);
        let blown = if !eval.max_u.is_finite() || !enstrophy.is_finite() {
            Some("non-finite velocity".to_string())
        } else if eval.max_u > cfg.blowup_velocity {
            Some(format!("max|u| = {:e} exceeds {:e}", eval.max_u, cfg.blowup_velocity))
        } else if enstrophy > cfg.blowup_enstrophy {
            Some(format!("enstrophy {enstrophy:e} exceeds {:e}", cfg.blowup_enstrophy))
        } else {
            None
        };
        if let Some(reason) = blown {
            traj.halt = Some(Halt {
                last_valid_time: if step == 0 { 0.0 } else { (step - 1) as f64 * cfg.dt },
                reason,
            });
            return Ok(traj);
        }
        if audit_now {
            let mut point = stepper.audit(step, time, &u, &eval);
            let current = stepper.mode_budget(&u, &eval.rhs);
            if let Some((t0, prev)) = &budget {
                point.dissipation = stepper.interval_dissipation(prev, &current, time - t0);
            }
            budget = Some((time, current));
            traj.audits.push(point);
        }
        if snap_iter.peek() == Some(&&step) {
            snap_iter.next();
            let state = State {
                step,
                time,
                velocity: SpectralField::from_components(grid, u.clone())?,
            };
            observer(&state)?;
            if cfg.store_states {
                traj.states.push(state);
            }
        }
        if step == n_steps {
            break;
        }
        let cfl = eval.max_u * cfg.dt / h;
        if cfl > cfg.cfl_limit {
            return Err(Error::StepSize {
                cfl,
                suggested_dt: 0.9 * cfg.cfl_limit * h / eval.max_u,
            });
        }
        stepper.advance(&mut u, &eval.rhs);
        step += 1;
    }
    Ok(traj)
}

pub fn nse_solve_spectral(u0: &SpectralField, cfg: &SolverConfig) -> Result<Trajectory> {
    let traj = integrate(u0, cfg, &mut |_| Ok(()))?;
    if let Some(h) = &traj.halt {
        return Err(Error::BlowUp {
            last_valid_time: h.last_valid_time,
            reason: h.reason.clone(),
        });
    }
    Ok(traj)
}

/// Solve to `cfg.t_end`; blow-up is an error.
pub fn nse_solve(u0: &Field, cfg: &SolverConfig) -> Result<Trajectory> {
    nse_solve_spectral(&u0.to_spectral()?, cfg)
}

/// One integrating-factor RK4 step of size `cfg.dt`.
pub fn nse_step(u: &Field, cfg: &SolverConfig) -> Result<Field> {
    cfg.validate()?;
    let s = u.to_spectral()?;
    check_initial(&s)?;
    let grid = *u.grid();
    let stepper = Stepper::new(grid, cfg);
    let mut comps = s.into_components();
    let eval = stepper.nonlinear.evaluate(&comps, false);
    if !eval.max_u.is_finite() {
        return Err(Error::BlowUp {
            last_valid_time: 0.0,
            reason: "non-finite velocity".into(),
        });
    }
    let cfl = eval.max_u * cfg.dt / grid.h();
    if cfl > cfg.cfl_limit {
        return Err(Error::StepSize {
            cfl,
            suggested_dt: 0.9 * cfg.cfl_limit * grid.h() / eval.max_u,
        });
    }
    stepper.advance(&mut comps, &eval.rhs);
    let out = SpectralField::from_components(grid, comps)?.to_physical();
    if !out.is_finite() {
        return Err(Error::BlowUp {
            last_valid_time: 0.0,
            reason: "non-finite velocity after one step".into(),
        });
    }
    Ok(out)
}
