use rustfft::num_complex::Complex64;

use super::fft;
use super::grid::BoxGrid;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    Vector,
}

impl Rank {
    pub fn components(self) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rank::Scalar => "scalar",
            Rank::Vector => "vector",
        }
    }
}

fn rank_of(count: usize) -> Result<Rank> {
    match count {
        1 => Ok(Rank::Scalar),
        3 => Ok(Rank::Vector),
        c => Err(Error::Usage(format!("fields have 1 or 3 components, got {c}"))),
    }
}

/// Real samples of a scalar or 3-vector function on a [`BoxGrid`] lattice.
///
/// Vector components are stored separately, each in x-fastest order.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: BoxGrid,
    comps: Vec<Vec<f64>>,
}

impl Field {
    pub fn zeros(grid: BoxGrid, rank: Rank) -> Self {
        Field {
            grid,
            comps: vec![vec![0.0; grid.len()]; rank.components()],
        }
    }

    pub fn from_components(grid: BoxGrid, comps: Vec<Vec<f64>>) -> Result<Self> {
        rank_of(comps.len())?;
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::Data(format!(
                "component length does not match N^3 = {}",
                grid.len()
            )));
        }
        Ok(Field { grid, comps })
    }

    pub fn scalar_from_fn(grid: BoxGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.point(idx))).collect();
        Field {
            grid,
            comps: vec![values],
        }
    }

    pub fn vector_from_fn(grid: BoxGrid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut comps = vec![Vec::with_capacity(grid.len()); 3];
        for idx in 0..grid.len() {
            let v = f(grid.point(idx));
            for c in 0..3 {
                comps[c].push(v[c]);
            }
        }
        Field { grid, comps }
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        rank_of(self.comps.len()).expect("validated on construction")
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.comps
    }

    /// Euclidean magnitude at lattice point `idx`.
    #[inline]
    pub fn magnitude_at(&self, idx: usize) -> f64 {
        self.comps.iter().map(|c| c[idx] * c[idx]).sum::<f64>().sqrt()
    }

    /// `max |f|` over the lattice.
    pub fn max_abs(&self) -> f64 {
        (0..self.grid.len())
            .map(|idx| self.magnitude_at(idx))
            .fold(0.0, f64::max)
    }

    /// Lattice quadrature of `|f|^p`, returned as `(h^3 sum |f|^p)^(1/p)`; `p = inf` gives the max.
    pub fn lattice_lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let sum: f64 = (0..self.grid.len())
            .map(|idx| {
                let sq: f64 = self.comps.iter().map(|c| c[idx] * c[idx]).sum();
                if p == 2.0 {
                    sq
                } else {
                    sq.powf(0.5 * p)
                }
            })
            .sum();
        (sum * self.grid.cell_volume()).powf(1.0 / p)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.comps.iter_mut().flatten() {
            *v *= factor;
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&mut self, factor: f64, other: &Field) -> Result<()> {
        if self.grid != other.grid || self.comps.len() != other.comps.len() {
            return Err(Error::Usage("fields live on different grids or ranks".into()));
        }
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += factor * y;
            }
        }
        Ok(())
    }

    pub fn to_spectral(&self) -> Result<SpectralField> {
        if !self.is_finite() {
            return Err(Error::Data("field contains non-finite samples".into()));
        }
        let plan = fft::plan(self.grid.n());
        let refs: Vec<&[f64]> = self.comps.iter().map(|c| c.as_slice()).collect();
        Ok(SpectralField {
            grid: self.grid,
            comps: plan.forward_real_many(&refs),
        })
    }
}

/// Fourier coefficients of a real field on a [`BoxGrid`].
///
/// Coefficient `c_m` multiplies `exp(i k_m . (x + alpha))`, i.e. the expansion
/// is taken about the lattice origin at the lower corner of the box. Spectra of
/// real fields are Hermitian: `c_{-m} = conj(c_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: BoxGrid,
    comps: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn zeros(grid: BoxGrid, rank: Rank) -> Self {
        SpectralField {
            grid,
            comps: vec![vec![Complex64::new(0.0, 0.0); grid.len()]; rank.components()],
        }
    }

    pub fn from_components(grid: BoxGrid, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        rank_of(comps.len())?;
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::Data(format!(
                "component length does not match N^3 = {}",
                grid.len()
            )));
        }
        Ok(SpectralField { grid, comps })
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        rank_of(self.comps.len()).expect("validated on construction")
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.comps
    }

    /// Coefficient of component `c` at signed mode `m`.
    pub fn coefficient(&self, c: usize, m: [i64; 3]) -> Complex64 {
        let g = &self.grid;
        self.comps[c][g.index(g.mode_position(m[0]), g.mode_position(m[1]), g.mode_position(m[2]))]
    }

    /// Set mode `m` of component `c` to `value` and `-m` to its conjugate.
    pub fn set_mode(&mut self, c: usize, m: [i64; 3], value: Complex64) {
        let g = self.grid;
        let pos = |m: [i64; 3]| {
            g.index(g.mode_position(m[0]), g.mode_position(m[1]), g.mode_position(m[2]))
        };
        let p = pos(m);
        let q = pos([-m[0], -m[1], -m[2]]);
        if p == q {
            self.comps[c][p] = Complex64::new(value.re, 0.0);
        } else {
            self.comps[c][p] = value;
            self.comps[c][q] = value.conj();
        }
    }

    /// Mean of each component (the k = 0 coefficient).
    pub fn mean(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c[0].re).collect()
    }

    /// Parseval: `||f||^2_{L^2} = (2 alpha)^3 sum |c_m|^2`.
    pub fn norm_sq(&self) -> f64 {
        self.weighted_norm_sq(|_| 1.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `(2 alpha)^3 sum_m w(|k_m|^2) |c_m|^2` over all components.
    pub fn weighted_norm_sq(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let ksq = self.grid.k_squared();
        let mut acc = 0.0;
        for comp in &self.comps {
            for (c, &k2) in comp.iter().zip(&ksq) {
                let a = c.norm_sqr();
                if a != 0.0 {
                    acc += weight(k2) * a;
                }
            }
        }
        acc * self.grid.volume()
    }

    /// L^2 inner product of two real fields.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        if self.grid != other.grid || self.comps.len() != other.comps.len() {
            return Err(Error::Usage("fields live on different grids or ranks".into()));
        }
        let mut acc = 0.0;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for (x, y) in a.iter().zip(b) {
                acc += (x.conj() * y).re;
            }
        }
        Ok(acc * self.grid.volume())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.comps.iter_mut().flatten() {
            *v *= factor;
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&mut self, factor: f64, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid || self.comps.len() != other.comps.len() {
            return Err(Error::Usage("fields live on different grids or ranks".into()));
        }
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y * factor;
            }
        }
        Ok(())
    }

    /// Largest coefficient modulus over all components.
    pub fn max_coefficient(&self) -> f64 {
        self.comps.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn to_physical(&self) -> Field {
        let plan = fft::plan(self.grid.n());
        let refs: Vec<&[Complex64]> = self.comps.iter().map(|c| c.as_slice()).collect();
        Field {
            grid: self.grid,
            comps: plan.inverse_real_many(&refs),
        }
    }
}
