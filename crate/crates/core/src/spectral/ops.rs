use rustfft::num_complex::Complex64;

use super::field::{Rank, SpectralField};
use super::grid::BoxGrid;
use crate::error::{Error, Result};

/// Spectral differential operators; all act diagonally on Fourier modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffOp {
    Gradient,
    Divergence,
    Curl,
    Laplacian,
}

#[inline]
fn times_i(c: Complex64) -> Complex64 {
    Complex64::new(-c.im, c.re)
}

/// Per-axis wavenumber tables shared by the operator loops.
pub(crate) struct Wavenumbers {
    pub n: usize,
    pub d: Vec<f64>,
    pub sq: Vec<f64>,
}

impl Wavenumbers {
    pub fn new(grid: &BoxGrid) -> Self {
        Wavenumbers {
            n: grid.n(),
            d: grid.derivative_wavenumbers(),
            sq: grid.squared_wavenumbers(),
        }
    }

    /// Derivative wavevector of the mode at flat index `idx`.
    #[inline]
    pub fn k(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        [self.d[idx % n], self.d[(idx / n) % n], self.d[idx / (n * n)]]
    }

    /// Full `|k|^2` (Nyquist included) at flat index `idx`.
    #[inline]
    pub fn ksq(&self, idx: usize) -> f64 {
        let n = self.n;
        self.sq[idx % n] + self.sq[(idx / n) % n] + self.sq[idx / (n * n)]
    }

    /// Per-axis squared wavenumbers at flat index `idx`.
    #[inline]
    pub fn ksq_axes(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        [self.sq[idx % n], self.sq[(idx / n) % n], self.sq[idx / (n * n)]]
    }
}

pub fn apply_diff(op: DiffOp, f: &SpectralField) -> Result<SpectralField> {
    let grid = *f.grid();
    let wn = Wavenumbers::new(&grid);
    let len = grid.len();
    match op {
        DiffOp::Gradient => {
            if f.rank() != Rank::Scalar {
                return Err(Error::Usage("gradient expects a scalar field".into()));
            }
            let src = f.component(0);
            let mut out = vec![vec![Complex64::new(0.0, 0.0); len]; 3];
            for idx in 0..len {
                let k = wn.k(idx);
                let v = times_i(src[idx]);
                for c in 0..3 {
                    out[c][idx] = v * k[c];
                }
            }
            SpectralField::from_components(grid, out)
        }
        DiffOp::Divergence => {
            if f.rank() != Rank::Vector {
                return Err(Error::Usage("divergence expects a vector field".into()));
            }
            let mut out = vec![Complex64::new(0.0, 0.0); len];
            for (idx, o) in out.iter_mut().enumerate() {
                let k = wn.k(idx);
                let dot = f.component(0)[idx] * k[0]
                    + f.component(1)[idx] * k[1]
                    + f.component(2)[idx] * k[2];
                *o = times_i(dot);
            }
            SpectralField::from_components(grid, vec![out])
        }
        DiffOp::Curl => {
            if f.rank() != Rank::Vector {
                return Err(Error::Usage("curl expects a vector field".into()));
            }
            let mut out = vec![vec![Complex64::new(0.0, 0.0); len]; 3];
            let (u0, u1, u2) = (f.component(0), f.component(1), f.component(2));
            for idx in 0..len {
                let k = wn.k(idx);
                out[0][idx] = times_i(u2[idx] * k[1] - u1[idx] * k[2]);
                out[1][idx] = times_i(u0[idx] * k[2] - u2[idx] * k[0]);
                out[2][idx] = times_i(u1[idx] * k[0] - u0[idx] * k[1]);
            }
            SpectralField::from_components(grid, out)
        }
        DiffOp::Laplacian => {
            let out = f
                .components()
                .iter()
                .map(|comp| {
                    comp.iter()
                        .enumerate()
                        .map(|(idx, c)| c * (-wn.ksq(idx)))
                        .collect()
                })
                .collect();
            SpectralField::from_components(grid, out)
        }
    }
}

/// `d_a d_b f` for every component of `f`.
pub fn second_derivative(f: &SpectralField, a: usize, b: usize) -> Result<SpectralField> {
    if a > 2 || b > 2 {
        return Err(Error::Usage("axis index out of range".into()));
    }
    let grid = *f.grid();
    let wn = Wavenumbers::new(&grid);
    let out = f
        .components()
        .iter()
        .map(|comp| {
            comp.iter()
                .enumerate()
                .map(|(idx, c)| {
                    let factor = if a == b {
                        wn.ksq_axes(idx)[a]
                    } else {
                        let k = wn.k(idx);
                        k[a] * k[b]
                    };
                    c * (-factor)
                })
                .collect()
        })
        .collect();
    SpectralField::from_components(grid, out)
}

/// All first derivatives `d_j f_i` of every component, ordered component-major.
pub fn jacobian(f: &SpectralField) -> Vec<Vec<Complex64>> {
    let grid = *f.grid();
    let wn = Wavenumbers::new(&grid);
    let mut out = Vec::with_capacity(3 * f.components().len());
    for comp in f.components() {
        for axis in 0..3 {
            out.push(
                comp.iter()
                    .enumerate()
                    .map(|(idx, c)| times_i(*c) * wn.k(idx)[axis])
                    .collect(),
            );
        }
    }
    out
}

/// In-place Leray projection of raw component spectra.
pub(crate) fn project_in_place(grid: &BoxGrid, comps: &mut [Vec<Complex64>]) {
    let wn = Wavenumbers::new(grid);
    let (a, rest) = comps.split_at_mut(1);
    let (b, c) = rest.split_at_mut(1);
    let (u0, u1, u2) = (&mut a[0], &mut b[0], &mut c[0]);
    for idx in 0..grid.len() {
        let k = wn.k(idx);
        let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if kk == 0.0 {
            continue;
        }
        let dot = (u0[idx] * k[0] + u1[idx] * k[1] + u2[idx] * k[2]) / kk;
        u0[idx] -= dot * k[0];
        u1[idx] -= dot * k[1];
        u2[idx] -= dot * k[2];
    }
}

/// Orthogonal projection onto divergence-free fields: `u_k - k (k . u_k)/|k|^2`.
///
/// The mean mode is left untouched.
pub fn leray_project(u: &SpectralField) -> Result<SpectralField> {
    if u.rank() != Rank::Vector {
        return Err(Error::Usage("Leray projection expects a vector field".into()));
    }
    let grid = *u.grid();
    let mut comps = u.components().to_vec();
    project_in_place(&grid, &mut comps);
    SpectralField::from_components(grid, comps)
}

/// Whether signed mode `m` survives the two-thirds rule on an `n`-point axis.
#[inline]
pub fn keeps_mode(m: i64, n: usize) -> bool {
    3 * m.unsigned_abs() < n as u64
}

pub(crate) fn dealias_in_place(grid: &BoxGrid, comps: &mut [Vec<Complex64>]) {
    let n = grid.n();
    let keep: Vec<bool> = (0..n).map(|i| keeps_mode(grid.mode(i), n)).collect();
    let zero = Complex64::new(0.0, 0.0);
    for comp in comps.iter_mut() {
        for (idx, c) in comp.iter_mut().enumerate() {
            let [i, j, k] = grid.unindex(idx);
            if !(keep[i] && keep[j] && keep[k]) {
                *c = zero;
            }
        }
    }
}

/// Two-thirds rule: zero every coefficient with `3|m_i| >= N` on some axis.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let grid = *f.grid();
    let mut comps = f.components().to_vec();
    dealias_in_place(&grid, &mut comps);
    SpectralField::from_components(grid, comps).expect("shape preserved")
}

/// `||div u|| / ||grad u||`, zero for constant fields.
pub fn relative_divergence(u: &SpectralField) -> Result<f64> {
    let div = apply_diff(DiffOp::Divergence, u)?.l2_norm();
    let wn = Wavenumbers::new(u.grid());
    let mut grad = 0.0;
    for comp in u.components() {
        for (idx, c) in comp.iter().enumerate() {
            let k = wn.k(idx);
            grad += (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * c.norm_sqr();
        }
    }
    let grad = (grad * u.grid().volume()).sqrt();
    Ok(if grad == 0.0 { div } else { div / grad })
}

/// `||grad u||_{L^2}` from the derivative wavenumbers (all components).
pub fn gradient_norm(u: &SpectralField) -> f64 {
    let wn = Wavenumbers::new(u.grid());
    let mut acc = 0.0;
    for comp in u.components() {
        for (idx, c) in comp.iter().enumerate() {
            let k = wn.k(idx);
            acc += (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * c.norm_sqr();
        }
    }
    (acc * u.grid().volume()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Field;
    use std::f64::consts::PI;

    fn taylor_green(grid: BoxGrid) -> Field {
        Field::vector_from_fn(grid, |x| {
            [
                x[0].sin() * x[1].cos() * x[2].cos(),
                -x[0].cos() * x[1].sin() * x[2].cos(),
                0.0,
            ]
        })
    }

    #[test]
    fn gradient_of_sine() {
        let alpha = 1.5;
        let g = BoxGrid::new(alpha, 16).unwrap();
        let f = Field::scalar_from_fn(g, |x| (PI * x[0] / alpha).sin());
        let grad = apply_diff(DiffOp::Gradient, &f.to_spectral().unwrap())
            .unwrap()
            .to_physical();
        for idx in 0..g.len() {
            let x = g.point(idx);
            let expected = PI / alpha * (PI * x[0] / alpha).cos();
            assert!((grad.component(0)[idx] - expected).abs() < 1e-12);
            assert!(grad.component(1)[idx].abs() < 1e-13);
            assert!(grad.component(2)[idx].abs() < 1e-13);
        }
    }

    #[test]
    fn taylor_green_is_divergence_free() {
        let g = BoxGrid::new(PI, 16).unwrap();
        let u = taylor_green(g).to_spectral().unwrap();
        let div = apply_diff(DiffOp::Divergence, &u).unwrap().to_physical();
        assert!(div.max_abs() < 1e-12);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = BoxGrid::new(1.0, 8).unwrap();
        let f = Field::scalar_from_fn(g, |_| 3.0).to_spectral().unwrap();
        let lap = apply_diff(DiffOp::Laplacian, &f).unwrap();
        assert!(lap.max_coefficient() == 0.0);
    }

    #[test]
    fn rank_mismatch_is_usage_error() {
        let g = BoxGrid::new(1.0, 8).unwrap();
        let s = SpectralField::zeros(g, Rank::Scalar);
        let v = SpectralField::zeros(g, Rank::Vector);
        assert!(matches!(apply_diff(DiffOp::Curl, &s), Err(Error::Usage(_))));
        assert!(matches!(apply_diff(DiffOp::Divergence, &s), Err(Error::Usage(_))));
        assert!(matches!(apply_diff(DiffOp::Gradient, &v), Err(Error::Usage(_))));
        assert!(leray_project(&s).is_err());
    }

    #[test]
    fn projection_kills_gradients_and_keeps_taylor_green() {
        let alpha = 1.0;
        let g = BoxGrid::new(alpha, 16).unwrap();
        let phi = Field::scalar_from_fn(g, |x| (PI * x[0] / alpha).sin());
        let grad = apply_diff(DiffOp::Gradient, &phi.to_spectral().unwrap()).unwrap();
        assert!(leray_project(&grad).unwrap().max_coefficient() < 1e-15);

        let g = BoxGrid::new(PI, 16).unwrap();
        let u = taylor_green(g).to_spectral().unwrap();
        let pu = leray_project(&u).unwrap();
        let mut diff = pu.clone();
        diff.add_scaled(-1.0, &u).unwrap();
        assert!(diff.l2_norm() <= 1e-12 * u.l2_norm());
    }

    #[test]
    fn dealias_rule() {
        assert!(keeps_mode(1, 16));
        assert!(keeps_mode(5, 16));
        assert!(!keeps_mode(6, 16));
        assert!(!keeps_mode(7, 16));
        assert!(!keeps_mode(-8, 16));
        let g = BoxGrid::new(1.0, 16).unwrap();
        let mut f = SpectralField::zeros(g, Rank::Scalar);
        f.set_mode(0, [1, 0, 0], Complex64::new(0.0, -0.5));
        assert_eq!(dealias(&f), f);
        let mut f = SpectralField::zeros(g, Rank::Scalar);
        f.set_mode(0, [7, 0, 0], Complex64::new(0.0, -0.5));
        assert_eq!(dealias(&f).max_coefficient(), 0.0);
    }
}
