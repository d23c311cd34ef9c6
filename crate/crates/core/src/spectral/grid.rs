use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible samples-per-axis.
pub const MIN_N: usize = 8;

/// Uniform lattice on the periodic box `(-alpha, alpha)^3`.
///
/// Lattice points are `x_j = -alpha + j*h`, `j = 0..N`, with `h = 2*alpha/N`.
/// Mode indices run over `[-N/2, N/2)` per axis and map to wavenumbers
/// `k = (pi/alpha) * m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxGrid {
    alpha: f64,
    n: usize,
}

impl BoxGrid {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Config(format!("box half-width must be positive, got {alpha}")));
        }
        if n % 2 != 0 || n < MIN_N {
            return Err(Error::Config(format!(
                "samples per axis must be even and at least {MIN_N}, got {n}"
            )));
        }
        Ok(BoxGrid { alpha, n })
    }

    /// Grid on `Q_alpha` with the given lattice spacing; `2*alpha/h` must be an even integer.
    pub fn with_spacing(alpha: f64, h: f64) -> Result<Self> {
        let raw = 2.0 * alpha / h;
        let n = raw.round();
        if (raw - n).abs() > 1e-9 * raw.max(1.0) {
            return Err(Error::Config(format!(
                "box half-width {alpha} is not a whole number of lattice cells of size {h}"
            )));
        }
        BoxGrid::new(alpha, n as usize)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        2.0 * self.alpha / self.n as f64
    }

    /// Number of lattice points, `N^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(2 alpha)^3`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.alpha).powi(3)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(3)
    }

    /// Smallest nonzero wavenumber magnitude, `pi/alpha`.
    pub fn min_wavenumber(&self) -> f64 {
        PI / self.alpha
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.alpha + i as f64 * self.h()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        [idx % self.n, (idx / self.n) % self.n, idx / (self.n * self.n)]
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unindex(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Signed mode number stored at array position `i` along one axis.
    #[inline]
    pub fn mode(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Array position along one axis of the signed mode `m` (taken modulo N).
    pub fn mode_position(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    pub fn wavenumber(&self, m: i64) -> f64 {
        PI * m as f64 / self.alpha
    }

    /// Per-axis wavenumbers for odd-order derivatives; the Nyquist entry is zero.
    pub fn derivative_wavenumbers(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let m = self.mode(i);
                if m == -(self.n as i64) / 2 {
                    0.0
                } else {
                    self.wavenumber(m)
                }
            })
            .collect()
    }

    /// Per-axis squared wavenumbers, Nyquist included.
    pub fn squared_wavenumbers(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.wavenumber(self.mode(i)).powi(2))
            .collect()
    }

    /// `|k|^2` for every mode in storage order.
    pub fn k_squared(&self) -> Vec<f64> {
        let sq = self.squared_wavenumbers();
        let n = self.n;
        let mut out = Vec::with_capacity(self.len());
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    out.push(sq[i] + sq[j] + sq[k]);
                }
            }
        }
        out
    }

    pub fn shares_spacing(&self, other: &BoxGrid) -> bool {
        (self.h() - other.h()).abs() <= 1e-12 * self.h()
    }

    /// The same number of samples on `Q_{factor*alpha}`.
    pub fn scaled(&self, factor: f64) -> Result<BoxGrid> {
        BoxGrid::new(self.alpha * factor, self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_smallest_wavenumber() {
        let g = BoxGrid::new(1.0, 16).unwrap();
        assert_eq!(g.h(), 0.125);
        assert!((g.min_wavenumber() - PI).abs() < 1e-15);
        assert_eq!(g.wavenumber(1), PI);
    }

    #[test]
    fn nested_boxes_share_spacing() {
        let a = BoxGrid::new(1.0, 16).unwrap();
        let b = BoxGrid::new(2.0, 32).unwrap();
        assert_eq!(b.h(), 0.125);
        assert!(a.shares_spacing(&b));
        let c = BoxGrid::with_spacing(4.0, 0.125).unwrap();
        assert_eq!(c.n(), 64);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(BoxGrid::new(1.0, 15).is_err());
        assert!(BoxGrid::new(1.0, 6).is_err());
        assert!(BoxGrid::new(0.0, 16).is_err());
        assert!(BoxGrid::new(-1.0, 16).is_err());
        assert!(BoxGrid::with_spacing(1.0, 0.3).is_err());
    }

    #[test]
    fn wavevector_set() {
        let g = BoxGrid::new(1.0, 8).unwrap();
        let modes: Vec<i64> = (0..8).map(|i| g.mode(i)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(modes.iter().filter(|&&m| m == 0).count(), 1);
        for &m in &modes {
            if m != -4 {
                assert!(modes.contains(&-m));
            }
        }
        assert_eq!(g.derivative_wavenumbers()[4], 0.0);
        assert_eq!(g.mode_position(-1), 7);
    }
}
