//! Pseudo-spectral evaluation of `-P[(u . grad) u]`.
//!
//! Physical fields are produced two per complex inverse FFT and accumulated
//! on the fly, so only six real work arrays are alive at once.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectral::{dealias_in_place, fft_plan, BoxGrid, Wavenumbers};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearForm {
    /// `(u . grad) u`.
    #[default]
    Convective,
    /// `omega x u`; differs from the convective form by a gradient.
    Rotational,
}

pub(crate) type Spectra = Vec<Vec<Complex64>>;

/// Result of one nonlinear evaluation.
pub(crate) struct Evaluation {
    /// `-P[(u . grad) u]` with the mean mode zeroed.
    pub rhs: Spectra,
    /// Lattice maximum of `|u|` for the (dealiased) input.
    pub max_u: f64,
    /// The unprojected product, when requested.
    pub product: Option<Spectra>,
}

pub(crate) struct Nonlinear {
    grid: BoxGrid,
    wn: Wavenumbers,
    keep: Vec<bool>,
    dealias: bool,
    form: NonlinearForm,
}

#[inline]
fn times_i(c: Complex64) -> Complex64 {
    Complex64::new(-c.im, c.re)
}

/// Source of a real field: `Velocity(i)` is `u_i`, `Gradient(i, j)` is `d_j u_i`,
/// `Vorticity(i)` is `(curl u)_i`.
#[derive(Clone, Copy)]
enum Source {
    Velocity(usize),
    Gradient(usize, usize),
    Vorticity(usize),
}

impl Nonlinear {
    pub fn new(grid: BoxGrid, dealias: bool, form: NonlinearForm) -> Self {
        let n = grid.n();
        let keep = (0..n)
            .map(|i| crate::spectral::keeps_mode(grid.mode(i), n))
            .collect();
        Nonlinear {
            grid,
            wn: Wavenumbers::new(&grid),
            keep,
            dealias,
            form,
        }
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    /// Spectral value of `source` at the mode `(i, j, k)` with flat index `idx`.
    #[inline]
    fn value(&self, u: &[Vec<Complex64>], source: Source, idx: usize, k: [f64; 3]) -> Complex64 {
        match source {
            Source::Velocity(c) => u[c][idx],
            Source::Gradient(c, j) => times_i(u[c][idx]) * k[j],
            Source::Vorticity(c) => {
                let (a, b) = ((c + 1) % 3, (c + 2) % 3);
                times_i(u[b][idx] * k[a] - u[a][idx] * k[b])
            }
        }
    }

    /// Inverse transform of two real fields given by their sources.
    fn pair_to_physical(
        &self,
        u: &[Vec<Complex64>],
        a: Source,
        b: Source,
        buf: &mut [Complex64],
    ) {
        let n = self.grid.n();
        let d = &self.wn.d;
        let mut idx = 0;
        for kz in 0..n {
            for ky in 0..n {
                for kx in 0..n {
                    let k = [d[kx], d[ky], d[kz]];
                    buf[idx] = self.value(u, a, idx, k) + times_i(self.value(u, b, idx, k));
                    idx += 1;
                }
            }
        }
        fft_plan(n).inverse(buf);
    }

    fn dealiased(&self, u: &[Vec<Complex64>]) -> Option<Spectra> {
        if !self.dealias {
            return None;
        }
        let mut out = u.to_vec();
        dealias_in_place(&self.grid, &mut out);
        Some(out)
    }

    pub fn evaluate(&self, u: &[Vec<Complex64>], keep_product: bool) -> Evaluation {
        let owned = self.dealiased(u);
        let u = owned.as_deref().unwrap_or(u);
        let len = self.grid.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        let mut vel = vec![vec![0.0; len]; 3];
        let mut prod = vec![vec![0.0; len]; 3];

        use Source::*;
        self.pair_to_physical(u, Velocity(0), Velocity(1), &mut buf);
        for (idx, z) in buf.iter().enumerate() {
            vel[0][idx] = z.re;
            vel[1][idx] = z.im;
        }
        match self.form {
            NonlinearForm::Convective => {
                // fields after u_0, u_1, paired in order
                let rest = [
                    Velocity(2),
                    Gradient(0, 0),
                    Gradient(0, 1),
                    Gradient(0, 2),
                    Gradient(1, 0),
                    Gradient(1, 1),
                    Gradient(1, 2),
                    Gradient(2, 0),
                    Gradient(2, 1),
                    Gradient(2, 2),
                ];
                for pair in rest.chunks(2) {
                    self.pair_to_physical(u, pair[0], pair[1], &mut buf);
                    for (slot, part) in pair.iter().zip([false, true]) {
                        match *slot {
                            Velocity(c) => {
                                for (v, z) in vel[c].iter_mut().zip(&buf) {
                                    *v = if part { z.im } else { z.re };
                                }
                            }
                            Gradient(c, j) => {
                                let (p, uj) = (&mut prod[c], &vel[j]);
                                for idx in 0..len {
                                    let g = if part { buf[idx].im } else { buf[idx].re };
                                    p[idx] += uj[idx] * g;
                                }
                            }
                            Vorticity(_) => unreachable!(),
                        }
                    }
                }
            }
            NonlinearForm::Rotational => {
                let mut w = vec![vec![0.0; len]; 3];
                self.pair_to_physical(u, Velocity(2), Vorticity(0), &mut buf);
                for idx in 0..len {
                    vel[2][idx] = buf[idx].re;
                    w[0][idx] = buf[idx].im;
                }
                self.pair_to_physical(u, Vorticity(1), Vorticity(2), &mut buf);
                for idx in 0..len {
                    w[1][idx] = buf[idx].re;
                    w[2][idx] = buf[idx].im;
                }
                for idx in 0..len {
                    prod[0][idx] = w[1][idx] * vel[2][idx] - w[2][idx] * vel[1][idx];
                    prod[1][idx] = w[2][idx] * vel[0][idx] - w[0][idx] * vel[2][idx];
                    prod[2][idx] = w[0][idx] * vel[1][idx] - w[1][idx] * vel[0][idx];
                }
            }
        }
        drop(buf);
        let mut max_sq = 0.0f64;
        for idx in 0..len {
            let s = vel[0][idx] * vel[0][idx] + vel[1][idx] * vel[1][idx] + vel[2][idx] * vel[2][idx];
            max_sq = max_sq.max(s);
        }
        drop(vel);
        let plan = fft_plan(self.grid.n());
        let refs: Vec<&[f64]> = prod.iter().map(|c| c.as_slice()).collect();
        let mut spectra = plan.forward_real_many(&refs);
        drop(prod);
        if self.dealias {
            self.truncate(&mut spectra);
        }
        let product = keep_product.then(|| spectra.clone());
        self.project_negated(&mut spectra);
        Evaluation {
            rhs: spectra,
            max_u: if max_sq.is_nan() { f64::NAN } else { max_sq.sqrt() },
            product,
        }
    }

    fn truncate(&self, spectra: &mut [Vec<Complex64>]) {
        let n = self.grid.n();
        let zero = Complex64::new(0.0, 0.0);
        for comp in spectra.iter_mut() {
            let mut idx = 0;
            for kz in 0..n {
                for ky in 0..n {
                    let row = self.keep[kz] && self.keep[ky];
                    for kx in 0..n {
                        if !(row && self.keep[kx]) {
                            comp[idx] = zero;
                        }
                        idx += 1;
                    }
                }
            }
        }
    }

    /// `f <- -P f` with the mean mode set to zero.
    fn project_negated(&self, f: &mut [Vec<Complex64>]) {
        crate::spectral::project_in_place(&self.grid, f);
        for comp in f.iter_mut() {
            for c in comp.iter_mut() {
                *c = -*c;
            }
            comp[0] = Complex64::new(0.0, 0.0);
        }
    }
}
