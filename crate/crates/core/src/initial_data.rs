//! Analytic initial data: compactly supported bumps, trefoil vortex tubes,
//! and the periodic reference flows.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    apply_diff, leray_project, relative_divergence, BoxGrid, Complex64, DiffOp, Field, Rank,
};
use crate::vorticity::{curl_inv_spectral, support_leak, VorticityField};

/// `exp(1 - 1/(1 - s^2))` for `|s| < 1`, else 0; equals 1 at the origin.
pub fn mollifier(s: f64) -> f64 {
    let s2 = s * s;
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s2)).exp()
    }
}

/// C-infinity step from 0 (t <= 0) to 1 (t >= 1).
pub fn smooth_step(t: f64) -> f64 {
    let f = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    let a = f(t);
    let b = f(1.0 - t);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

fn default_direction() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// Potential `A = amplitude * g(|x|/r) * e` with `g` the standard mollifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub support_radius: f64,
    pub amplitude: f64,
    #[serde(default = "default_direction")]
    pub direction: [f64; 3],
}

impl BumpSpec {
    pub fn new(support_radius: f64, amplitude: f64) -> Self {
        BumpSpec {
            support_radius,
            amplitude,
            direction: default_direction(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.support_radius > 0.0) || !self.support_radius.is_finite() {
            return Err(Error::Config(format!(
                "bump support radius must be positive, got {}",
                self.support_radius
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::Config("bump amplitude must be finite".into()));
        }
        let norm = self.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Config("bump direction must be a nonzero vector".into()));
        }
        Ok(())
    }

    fn unit_direction(&self) -> [f64; 3] {
        let norm = self.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        [
            self.direction[0] / norm,
            self.direction[1] / norm,
            self.direction[2] / norm,
        ]
    }

    fn check_fits(&self, grid: &BoxGrid) -> Result<()> {
        self.validate()?;
        if self.support_radius >= grid.alpha() {
            return Err(Error::DomainTooSmall {
                radius: self.support_radius,
                alpha: grid.alpha(),
            });
        }
        Ok(())
    }
}

/// Lattice samples of the vector potential.
pub fn bump_potential(spec: &BumpSpec, grid: &BoxGrid) -> Result<Field> {
    spec.check_fits(grid)?;
    let e = spec.unit_direction();
    let r = spec.support_radius;
    let a = spec.amplitude;
    Ok(Field::vector_from_fn(*grid, |x| {
        let g = a * mollifier((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() / r);
        [g * e[0], g * e[1], g * e[2]]
    }))
}

fn spectral_curl_of_potential(spec: &BumpSpec, grid: &BoxGrid) -> Result<Field> {
    let a = bump_potential(spec, grid)?.to_spectral()?;
    Ok(apply_diff(DiffOp::Curl, &a)?.to_physical())
}

/// `omega = curl A`, differentiated spectrally so that it is discretely divergence-free and zero-mean.
pub fn bump_vorticity(spec: &BumpSpec, grid: &BoxGrid) -> Result<VorticityField> {
    VorticityField::new(spectral_curl_of_potential(spec, grid)?, spec.support_radius)
}

/// Velocity `u = curl A` itself: compactly supported, divergence-free, zero-mean.
pub fn bump_velocity(spec: &BumpSpec, grid: &BoxGrid) -> Result<Field> {
    spectral_curl_of_potential(spec, grid)
}

fn default_segments() -> usize {
    512
}

/// Gaussian vortex tube around the (2,3) torus knot
/// `((R + R/2 cos 3t) cos 2t, (R + R/2 cos 3t) sin 2t, R/2 sin 3t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrefoilSpec {
    pub major_radius: f64,
    pub tube_radius: f64,
    pub circulation: f64,
    #[serde(default = "default_segments")]
    pub segments: usize,
    /// Reflect the knot through the `x3 = 0` plane.
    #[serde(default)]
    pub mirrored: bool,
}

impl TrefoilSpec {
    pub fn new(major_radius: f64, tube_radius: f64, circulation: f64) -> Self {
        TrefoilSpec {
            major_radius,
            tube_radius,
            circulation,
            segments: default_segments(),
            mirrored: false,
        }
    }

    /// Radius of a ball containing the truncated tube.
    pub fn support_radius(&self) -> f64 {
        1.5 * self.major_radius + 3.0 * self.tube_radius
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.major_radius > 0.0 && self.tube_radius > 0.0) {
            return Err(Error::Config("trefoil radii must be positive".into()));
        }
        if !self.circulation.is_finite() {
            return Err(Error::Config("trefoil circulation must be finite".into()));
        }
        if self.segments < 16 {
            return Err(Error::Config("trefoil needs at least 16 segments".into()));
        }
        Ok(())
    }

    fn curve(&self, t: f64) -> ([f64; 3], [f64; 3]) {
        let r0 = self.major_radius;
        let r1 = 0.5 * r0;
        let s = if self.mirrored { -1.0 } else { 1.0 };
        let rho = r0 + r1 * (3.0 * t).cos();
        let drho = -3.0 * r1 * (3.0 * t).sin();
        let p = [rho * (2.0 * t).cos(), rho * (2.0 * t).sin(), s * r1 * (3.0 * t).sin()];
        let d = [
            drho * (2.0 * t).cos() - 2.0 * rho * (2.0 * t).sin(),
            drho * (2.0 * t).sin() + 2.0 * rho * (2.0 * t).cos(),
            s * 3.0 * r1 * (3.0 * t).cos(),
        ];
        (p, d)
    }
}

/// Construction residuals of a trefoil vorticity.
#[derive(Clone, Debug, PartialEq)]
pub struct TrefoilReport {
    /// Relative divergence after projection.
    pub divergence: f64,
    /// Relative divergence of the raw tube before projection.
    pub raw_divergence: f64,
    /// `max_{|x| > support} |omega| / max |omega|`.
    pub leakage: f64,
    /// `||P omega_raw - omega_raw|| / ||omega_raw||`.
    pub projection_change: f64,
}

/// Tube profile: Gaussian in the distance `d`, smoothly cut off between 2 and 3 tube radii.
fn tube_profile(d: f64, sigma: f64) -> f64 {
    let t = d / sigma;
    if t >= 3.0 {
        return 0.0;
    }
    (-0.5 * t * t).exp() * (1.0 - smooth_step(t - 2.0))
}

/// Vorticity along the knot tangent, summed over tangent-weighted samples of
/// the curve, then Leray-projected once with the mean removed.
pub fn trefoil_vorticity(
    spec: &TrefoilSpec,
    grid: &BoxGrid,
) -> Result<(VorticityField, TrefoilReport)> {
    spec.validate()?;
    let support = spec.support_radius();
    if support >= 0.9 * grid.alpha() {
        return Err(Error::DomainTooSmall {
            radius: support,
            alpha: grid.alpha(),
        });
    }
    let mut raw = Field::zeros(*grid, Rank::Vector);
    if spec.circulation != 0.0 {
        let sigma = spec.tube_radius;
        let h = grid.h();
        let reach = 3.0 * sigma;
        let span = (reach / h).ceil() as i64 + 1;
        let n = grid.n() as i64;
        let dt = 2.0 * PI / spec.segments as f64;
        let weight = spec.circulation / (2.0 * PI * sigma * sigma) * dt;
        let alpha = grid.alpha();
        for seg in 0..spec.segments {
            let (p, d) = spec.curve(seg as f64 * dt);
            let centre: Vec<i64> = p.iter().map(|c| ((c + alpha) / h).round() as i64).collect();
            for dk in -span..=span {
                let k = centre[2] + dk;
                if k < 0 || k >= n {
                    continue;
                }
                for dj in -span..=span {
                    let j = centre[1] + dj;
                    if j < 0 || j >= n {
                        continue;
                    }
                    for di in -span..=span {
                        let i = centre[0] + di;
                        if i < 0 || i >= n {
                            continue;
                        }
                        let x = [grid.coord(i as usize), grid.coord(j as usize), grid.coord(k as usize)];
                        let dist = ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2) + (x[2] - p[2]).powi(2)).sqrt();
                        let phi = tube_profile(dist, sigma);
                        if phi == 0.0 {
                            continue;
                        }
                        let idx = grid.index(i as usize, j as usize, k as usize);
                        for c in 0..3 {
                            raw.component_mut(c)[idx] += weight * phi * d[c];
                        }
                    }
                }
            }
        }
    }
    let raw_s = raw.to_spectral()?;
    let raw_divergence = relative_divergence(&raw_s)?;
    let mut projected = leray_project(&raw_s)?;
    for c in 0..3 {
        projected.component_mut(c)[0] = Complex64::new(0.0, 0.0);
    }
    let raw_norm = raw_s.l2_norm();
    let mut change = projected.clone();
    change.add_scaled(-1.0, &raw_s)?;
    let projection_change = if raw_norm == 0.0 { 0.0 } else { change.l2_norm() / raw_norm };
    let divergence = relative_divergence(&projected)?;
    let omega = projected.to_physical();
    let leakage = support_leak(&omega, support);
    let field = VorticityField::new(omega, support)?;
    Ok((
        field,
        TrefoilReport {
            divergence,
            raw_divergence,
            leakage,
            projection_change,
        },
    ))
}

/// `int u . omega` with `u` the periodic curl inverse of `omega`.
pub fn helicity(omega: &VorticityField) -> Result<f64> {
    let w = omega.omega().to_spectral()?;
    let u = curl_inv_spectral(&w)?;
    u.inner(&w)
}

/// `(sin kx cos ky cos kz, -cos kx sin ky cos kz, 0)` with `k = pi/alpha`.
pub fn taylor_green(grid: &BoxGrid) -> Field {
    let k = PI / grid.alpha();
    Field::vector_from_fn(*grid, |x| {
        let (s0, c0) = (k * x[0]).sin_cos();
        let (s1, c1) = (k * x[1]).sin_cos();
        let c2 = (k * x[2]).cos();
        [s0 * c1 * c2, -c0 * s1 * c2, 0.0]
    })
}

/// Shear flow `(A sin(pi x2/alpha), 0, 0)`, an exact decaying solution.
pub fn shear(grid: &BoxGrid, amplitude: f64) -> Field {
    let k = PI / grid.alpha();
    Field::vector_from_fn(*grid, |x| [amplitude * (k * x[1]).sin(), 0.0, 0.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vorticity::curl_inv_periodic;

    #[test]
    fn mollifier_shape() {
        assert_eq!(mollifier(0.0), 1.0);
        assert_eq!(mollifier(1.0), 0.0);
        assert_eq!(mollifier(-1.2), 0.0);
        assert!(mollifier(0.99) > 0.0 && mollifier(0.99) < 1e-20);
        assert_eq!(smooth_step(-0.1), 0.0);
        assert_eq!(smooth_step(1.5), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bump_vorticity_is_admissible() {
        let g = BoxGrid::new(1.0, 32).unwrap();
        let w = bump_vorticity(&BumpSpec::new(0.5, 2.0), &g).unwrap();
        let s = w.omega().to_spectral().unwrap();
        assert!(relative_divergence(&s).unwrap() <= 1e-12);
        for m in s.mean() {
            assert!(m.abs() <= 1e-14);
        }
        assert!(w.omega().max_abs() > 0.0);
    }

    #[test]
    fn bump_leak_shrinks_with_resolution() {
        let spec = BumpSpec::new(0.5, 1.0);
        let coarse = bump_vorticity(&spec, &BoxGrid::new(1.0, 16).unwrap()).unwrap();
        let fine = bump_vorticity(&spec, &BoxGrid::new(1.0, 64).unwrap()).unwrap();
        assert!(fine.support_leak() < coarse.support_leak());
    }

    #[test]
    fn bump_must_fit() {
        let g = BoxGrid::new(1.0, 16).unwrap();
        assert!(matches!(
            bump_vorticity(&BumpSpec::new(1.0, 1.0), &g),
            Err(Error::DomainTooSmall { .. })
        ));
        let mut spec = BumpSpec::new(0.5, 1.0);
        spec.direction = [0.0; 3];
        assert!(matches!(bump_velocity(&spec, &g), Err(Error::Config(_))));
    }

    #[test]
    fn deterministic_generation() {
        let g = BoxGrid::new(1.0, 16).unwrap();
        let spec = BumpSpec::new(0.5, 1.0);
        let a = bump_vorticity(&spec, &g).unwrap();
        let b = bump_vorticity(&spec, &g).unwrap();
        assert_eq!(a.omega(), b.omega());
    }

    #[test]
    fn curl_inverse_of_bump_obeys_gradient_identity() {
        let g = BoxGrid::new(1.0, 32).unwrap();
        let w = bump_vorticity(&BumpSpec::new(0.6, 1.0), &g).unwrap();
        let u = curl_inv_periodic(&w).unwrap();
        let grad = crate::spectral::gradient_norm(&u.to_spectral().unwrap());
        let wn = w.omega().to_spectral().unwrap().l2_norm();
        assert!((grad - wn).abs() <= 1e-10 * wn);
    }

    #[test]
    fn zero_circulation_trefoil() {
        let g = BoxGrid::new(2.0, 32).unwrap();
        let (w, rep) = trefoil_vorticity(&TrefoilSpec::new(0.6, 0.15, 0.0), &g).unwrap();
        assert_eq!(w.omega().max_abs(), 0.0);
        assert_eq!(rep.leakage, 0.0);
    }

    #[test]
    fn trefoil_must_fit() {
        let g = BoxGrid::new(1.0, 16).unwrap();
        assert!(matches!(
            trefoil_vorticity(&TrefoilSpec::new(0.6, 0.1, 1.0), &g),
            Err(Error::DomainTooSmall { .. })
        ));
    }

    #[test]
    fn taylor_green_and_shear_are_solenoidal() {
        let g = BoxGrid::new(PI, 16).unwrap();
        for u in [taylor_green(&g), shear(&g, 2.0)] {
            let s = u.to_spectral().unwrap();
            assert!(relative_divergence(&s).unwrap() < 1e-14);
        }
    }
}
