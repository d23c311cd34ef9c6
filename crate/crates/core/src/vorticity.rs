//! Velocity from vorticity: Fourier inversion on periodic boxes and a
//! whole-space Biot–Savart quadrature used as a point oracle.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::norms::{DiagnosticsRecord, NormReport};
use crate::spectral::{
    gradient_norm, leray_project, relative_divergence, BoxGrid, Complex64, DiffOp, Field, Rank,
    SpectralField, Wavenumbers,
};

/// Relative divergence accepted for vorticity input.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-10;
/// Relative mean accepted for vorticity input.
pub const MEAN_TOLERANCE: f64 = 1e-12;

/// A divergence-free, zero-mean vorticity nominally supported in `B(0, support_radius)`.
#[derive(Clone, Debug)]
pub struct VorticityField {
    omega: Field,
    support_radius: f64,
    leak: f64,
}

/// `max_{|x| > r} |f| / max |f|`, zero for the zero field.
pub fn support_leak(f: &Field, radius: f64) -> f64 {
    let grid = f.grid();
    let total = f.max_abs();
    if total == 0.0 {
        return 0.0;
    }
    let r2 = radius * radius;
    let mut outside = 0.0f64;
    for idx in 0..grid.len() {
        let x = grid.point(idx);
        if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > r2 {
            outside = outside.max(f.magnitude_at(idx));
        }
    }
    outside / total
}

fn relative_mean(s: &SpectralField) -> f64 {
    let norm = s.l2_norm();
    if norm == 0.0 {
        return 0.0;
    }
    let mean: f64 = s.mean().iter().map(|m| m * m).sum::<f64>().sqrt();
    mean * s.grid().volume().sqrt() / norm
}

impl VorticityField {
    /// Validate divergence and mean; the support leak is measured, not enforced.
    pub fn new(omega: Field, support_radius: f64) -> Result<Self> {
        if omega.rank() != Rank::Vector {
            return Err(Error::Usage("vorticity must be a vector field".into()));
        }
        if !(support_radius > 0.0) {
            return Err(Error::Config(format!(
                "support radius must be positive, got {support_radius}"
            )));
        }
        let s = omega.to_spectral()?;
        check_admissible(&s)?;
        let leak = support_leak(&omega, support_radius);
        Ok(VorticityField {
            omega,
            support_radius,
            leak,
        })
    }

    pub fn omega(&self) -> &Field {
        &self.omega
    }

    pub fn into_field(self) -> Field {
        self.omega
    }

    pub fn grid(&self) -> &BoxGrid {
        self.omega.grid()
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// `max_{|x| > r} |omega| / max |omega|` over the lattice.
    pub fn support_leak(&self) -> f64 {
        self.leak
    }
}

fn check_admissible(s: &SpectralField) -> Result<()> {
    let mean = relative_mean(s);
    if mean > MEAN_TOLERANCE {
        return Err(Error::Data(format!("vorticity has nonzero mean ({mean:e} relative)")));
    }
    let div = relative_divergence(s)?;
    if div > DIVERGENCE_TOLERANCE {
        return Err(Error::Data(format!("vorticity is not divergence-free ({div:e} relative)")));
    }
    Ok(())
}

/// `u_k = (i k x omega_k)/|k|^2`, `u_0 = 0`, for one spectral component at a time.
pub(crate) fn curl_inverse_component(
    grid: &BoxGrid,
    omega: &[Vec<Complex64>],
    c: usize,
) -> Vec<Complex64> {
    let wn = Wavenumbers::new(grid);
    let (a, b) = ((c + 1) % 3, (c + 2) % 3);
    (0..grid.len())
        .map(|idx| {
            let k = wn.k(idx);
            let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if kk == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let cross = omega[b][idx] * k[a] - omega[a][idx] * k[b];
            Complex64::new(-cross.im, cross.re) / kk
        })
        .collect()
}

/// Spectral curl inverse without input validation.
pub fn curl_inv_spectral(omega: &SpectralField) -> Result<SpectralField> {
    if omega.rank() != Rank::Vector {
        return Err(Error::Usage("curl inverse expects a vector field".into()));
    }
    let grid = *omega.grid();
    let comps = (0..3)
        .map(|c| curl_inverse_component(&grid, omega.components(), c))
        .collect();
    SpectralField::from_components(grid, comps)
}

/// Divergence-free, zero-mean `u` on `Q_alpha` with `curl u = omega`.
pub fn curl_inv_periodic(omega: &VorticityField) -> Result<Field> {
    let grid = omega.grid();
    if omega.support_radius() >= grid.alpha() {
        return Err(Error::DomainTooSmall {
            radius: omega.support_radius(),
            alpha: grid.alpha(),
        });
    }
    let s = omega.omega().to_spectral()?;
    check_admissible(&s)?;
    Ok(curl_inv_spectral(&s)?.to_physical())
}

/// One Biot–Savart evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiotSavartSample {
    pub point: [f64; 3],
    pub velocity: [f64; 3],
    /// The query lies within `h/2` of a support lattice point.
    pub under_resolved: bool,
}

/// Whole-space Biot–Savart quadrature by midpoint summation over support lattice points.
///
/// Sums `-(1/4 pi) (x - y)/|x - y|^3 x omega(y) h^3` over lattice points `y` with
/// `|y| <= support_radius + 2h`, omitting `y = x`.
pub fn biot_savart_r3(omega: &VorticityField, query: &[[f64; 3]]) -> Vec<BiotSavartSample> {
    let grid = omega.grid();
    let h = grid.h();
    let cutoff = omega.support_radius() + 2.0 * h;
    let w = omega.omega();
    let mut support = Vec::new();
    for idx in 0..grid.len() {
        let y = grid.point(idx);
        if y[0] * y[0] + y[1] * y[1] + y[2] * y[2] <= cutoff * cutoff {
            let v = [w.component(0)[idx], w.component(1)[idx], w.component(2)[idx]];
            if v != [0.0; 3] {
                support.push((y, v));
            }
        }
    }
    let weight = -grid.cell_volume() / (4.0 * PI);
    query
        .iter()
        .map(|&x| {
            let mut u = [0.0; 3];
            let mut under_resolved = false;
            for (y, v) in &support {
                let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                if r2 < 0.25 * h * h {
                    under_resolved = true;
                    if r2 < 1e-24 * h * h {
                        continue;
                    }
                }
                let inv = weight / (r2 * r2.sqrt());
                u[0] += inv * (d[1] * v[2] - d[2] * v[1]);
                u[1] += inv * (d[2] * v[0] - d[0] * v[2]);
                u[2] += inv * (d[0] * v[1] - d[1] * v[0]);
            }
            BiotSavartSample {
                point: x,
                velocity: u,
                under_resolved,
            }
        })
        .collect()
}

/// `||grad u||`, `||curl u||` and their relative difference.
///
/// The identity only holds for divergence-free fields; a relative divergence
/// above `1e-8` adds the flag `not_divergence_free`.
pub fn curl_identity_report(u: &Field) -> Result<DiagnosticsRecord> {
    if u.rank() != Rank::Vector {
        return Err(Error::Usage("curl identity needs a vector field".into()));
    }
    let s = u.to_spectral()?;
    curl_identity_spectral(&s)
}

pub(crate) fn curl_identity_spectral(s: &SpectralField) -> Result<DiagnosticsRecord> {
    let grad = gradient_norm(s);
    let curl = crate::spectral::apply_diff(DiffOp::Curl, s)?.l2_norm();
    let rel = if grad == 0.0 && curl == 0.0 {
        0.0
    } else {
        (grad - curl).abs() / grad.max(curl)
    };
    let mut values = NormReport::new();
    values.insert("grad_norm", grad);
    values.insert("curl_norm", curl);
    values.insert("relative_difference", rel);
    let mut rec = DiagnosticsRecord::new(0.0, values);
    let div = relative_divergence(s)?;
    if div > 1e-8 {
        rec.flag("not_divergence_free");
    }
    Ok(rec)
}

/// One row of the `L^p -> L^q` uniformity table.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformityRow {
    pub alpha: f64,
    pub omega_lp: f64,
    pub u_lq: f64,
    /// `None` when both norms vanish.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniformityTable {
    pub p: f64,
    pub q: f64,
    pub rows: Vec<UniformityRow>,
}

impl UniformityTable {
    pub fn is_degenerate(&self) -> bool {
        self.rows.iter().all(|r| r.ratio.is_none())
    }

    /// `max ratio / min ratio`, `None` if degenerate.
    pub fn spread(&self) -> Option<f64> {
        let ratios: Vec<f64> = self.rows.iter().filter_map(|r| r.ratio).collect();
        if ratios.is_empty() {
            return None;
        }
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        Some(max / min)
    }
}

/// Embed lattice samples of `f` into the centered sub-lattice of a larger grid with the same spacing.
pub(crate) fn embed(f: &Field, target: BoxGrid) -> Result<Field> {
    let src = f.grid();
    if !src.shares_spacing(&target) {
        return Err(Error::GridMismatch {
            left: src.h(),
            right: target.h(),
        });
    }
    if target.n() < src.n() {
        return Err(Error::TruncatedSupport {
            target: target.alpha(),
            required: src.alpha(),
        });
    }
    let off = (target.n() - src.n()) / 2;
    let n = src.n();
    let mut out = Field::zeros(target, f.rank());
    for c in 0..f.components().len() {
        let s = f.component(c);
        let t = out.component_mut(c);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    t[target.index(i + off, j + off, k + off)] = s[src.index(i, j, k)];
                }
            }
        }
    }
    Ok(out)
}

/// `||curl^{-1} omega||_{L^q(Q_alpha)} / ||omega||_{L^p(Q_alpha)}` for each box, `1/q = 1/p - 1/3`.
///
/// `omega` lives on the smallest box; it is embedded into each larger box with
/// the same lattice spacing and re-projected there to remove the divergence the
/// embedding introduces at the level of its boundary leakage.
pub fn lplq_uniformity_report(
    omega: &VorticityField,
    p: f64,
    alphas: &[f64],
) -> Result<UniformityTable> {
    if !(p > 1.0 && p < 3.0) {
        return Err(Error::Usage(format!("exponent p must lie in (1, 3), got {p}")));
    }
    let q = 1.0 / (1.0 / p - 1.0 / 3.0);
    let h = omega.grid().h();
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let grid = BoxGrid::with_spacing(alpha, h)?;
        let w = embed(omega.omega(), grid)?;
        let mut s = leray_project(&w.to_spectral()?)?;
        for c in 0..3 {
            s.component_mut(c)[0] = Complex64::new(0.0, 0.0);
        }
        let w = s.to_physical();
        let field = VorticityField::new(w, omega.support_radius())?;
        let u = curl_inv_periodic(&field)?;
        let omega_lp = field.omega().lattice_lp_norm(p);
        let u_lq = u.lattice_lp_norm(q);
        let ratio = if omega_lp == 0.0 { None } else { Some(u_lq / omega_lp) };
        rows.push(UniformityRow {
            alpha,
            omega_lp,
            u_lq,
            ratio,
        });
    }
    Ok(UniformityTable { p, q, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::{bump_vorticity, BumpSpec};
    use crate::test_util::random_solenoidal;

    #[test]
    fn single_mode_inversion() {
        let alpha = 1.5;
        let c = 0.7;
        let g = BoxGrid::new(alpha, 16).unwrap();
        let w = Field::vector_from_fn(g, |x| [0.0, 0.0, c * (PI * x[0] / alpha).sin()]);
        let u = curl_inv_periodic(&VorticityField::new(w, 1.0).unwrap()).unwrap();
        for idx in 0..g.len() {
            let x = g.point(idx);
            let expected = -(c * alpha / PI) * (PI * x[0] / alpha).cos();
            assert!(u.component(0)[idx].abs() < 1e-13);
            assert!((u.component(1)[idx] - expected).abs() < 1e-13);
            assert!(u.component(2)[idx].abs() < 1e-13);
        }
    }

    #[test]
    fn zero_vorticity() {
        let g = BoxGrid::new(1.0, 8).unwrap();
        let w = VorticityField::new(Field::zeros(g, Rank::Vector), 0.5).unwrap();
        assert_eq!(curl_inv_periodic(&w).unwrap().max_abs(), 0.0);
        let bs = biot_savart_r3(&w, &[[0.3, 0.1, 0.0]]);
        assert_eq!(bs[0].velocity, [0.0; 3]);
        assert_eq!(w.support_leak(), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let g = BoxGrid::new(1.0, 8).unwrap();
        let constant = Field::vector_from_fn(g, |_| [1.0, 0.0, 0.0]);
        assert!(matches!(VorticityField::new(constant, 0.5), Err(Error::Data(_))));
        let grad = Field::vector_from_fn(g, |x| [(PI * x[0]).cos(), 0.0, 0.0]);
        assert!(matches!(VorticityField::new(grad, 0.5), Err(Error::Data(_))));
        let w = VorticityField::new(Field::zeros(g, Rank::Vector), 1.0).unwrap();
        assert!(matches!(curl_inv_periodic(&w), Err(Error::DomainTooSmall { .. })));
    }

    #[test]
    fn gradient_norm_equals_vorticity_norm() {
        let g = BoxGrid::new(1.0, 32).unwrap();
        let spec = BumpSpec::new(0.5, 1.0);
        let w = bump_vorticity(&spec, &g).unwrap();
        let u = curl_inv_periodic(&w).unwrap();
        let grad = gradient_norm(&u.to_spectral().unwrap());
        let wn = w.omega().to_spectral().unwrap().l2_norm();
        assert!((grad - wn).abs() <= 1e-10 * wn);
        let curl = crate::spectral::apply_diff(DiffOp::Curl, &u.to_spectral().unwrap())
            .unwrap()
            .to_physical();
        let mut diff = curl;
        diff.add_scaled(-1.0, w.omega()).unwrap();
        assert!(diff.max_abs() <= 1e-10 * w.omega().max_abs());
    }

    #[test]
    fn biot_savart_far_field_decay() {
        let g = BoxGrid::new(2.0, 32).unwrap();
        let spec = BumpSpec::new(0.25, 1.0);
        let w = bump_vorticity(&spec, &g).unwrap();
        let dir = [0.6, 0.0, 0.8];
        let at = |r: f64| [dir[0] * r, dir[1] * r, dir[2] * r];
        let s = biot_savart_r3(&w, &[at(1.0), at(2.0)]);
        let mag = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let ratio = mag(s[0].velocity) / mag(s[1].velocity);
        assert!((ratio - 8.0).abs() < 0.5, "decay ratio {ratio}");
        assert!(!s[0].under_resolved);
    }

    #[test]
    fn under_resolved_queries_are_flagged() {
        let g = BoxGrid::new(1.0, 16).unwrap();
        let w = bump_vorticity(&BumpSpec::new(0.5, 1.0), &g).unwrap();
        let s = biot_savart_r3(&w, &[[0.125, 0.0, 0.01], [0.9, 0.9, 0.9]]);
        assert!(s[0].under_resolved);
        assert!(!s[1].under_resolved);
    }

    #[test]
    fn curl_identity_for_random_solenoidal_fields() {
        let g = BoxGrid::new(1.0, 16).unwrap();
        for seed in 0..5 {
            let u = random_solenoidal(g, 5, seed).to_physical();
            let r = curl_identity_report(&u).unwrap();
            assert!(r.values.get("relative_difference").unwrap() <= 1e-10);
            assert!(r.flags.is_empty());
        }
        let z = curl_identity_report(&Field::zeros(g, Rank::Vector)).unwrap();
        assert_eq!(z.values.get("relative_difference"), Some(0.0));
    }

    #[test]
    fn identity_flags_gradients() {
        let g = BoxGrid::new(1.0, 16).unwrap();
        let u = Field::vector_from_fn(g, |x| [(PI * x[0]).sin(), 0.0, 0.0]);
        let r = curl_identity_report(&u).unwrap();
        assert!(r.flags.iter().any(|f| f == "not_divergence_free"));
    }

    #[test]
    fn uniformity_rejects_bad_exponent() {
        let g = BoxGrid::new(1.0, 8).unwrap();
        let w = VorticityField::new(Field::zeros(g, Rank::Vector), 0.5).unwrap();
        assert!(matches!(lplq_uniformity_report(&w, 3.0, &[1.0]), Err(Error::Usage(_))));
        let t = lplq_uniformity_report(&w, 1.2, &[1.0, 2.0]).unwrap();
        assert!(t.is_degenerate());
        assert!(t.spread().is_none());
    }
}
