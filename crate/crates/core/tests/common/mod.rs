//! Shared helpers for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use nsbox::spectral::{leray_project, BoxGrid, Complex64, Field, Rank};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random real trigonometric polynomial sampled point by point.
///
/// Each component is `sum_m a_m cos(k_m . x) + b_m sin(k_m . x)` over the
/// half-lattice of modes `0 < |m|_inf <= band`, with `k_m = pi m / alpha` and
/// coefficients uniform in `[-1, 1]` damped by `1 / (1 + |m|^2)`. No constant
/// mode, so the field has zero mean.
pub fn trig_field(grid: BoxGrid, rank: Rank, band: i64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for m0 in -band..=band {
        for m1 in -band..=band {
            for m2 in -band..=band {
                if (m0, m1, m2) <= (0, 0, 0) {
                    continue;
                }
                let damp = 1.0 / (1.0 + (m0 * m0 + m1 * m1 + m2 * m2) as f64);
                let coeffs: Vec<(f64, f64)> = (0..rank.components())
                    .map(|_| (damp * rng.gen_range(-1.0..1.0), damp * rng.gen_range(-1.0..1.0)))
                    .collect();
                modes.push(([m0 as f64, m1 as f64, m2 as f64], coeffs));
            }
        }
    }
    // per-axis exponentials exp(i pi m x / alpha), indexed by m + band
    let n = grid.n();
    let k = PI / grid.alpha();
    let axis: Vec<Vec<Complex64>> = (-band..=band)
        .map(|m| (0..n).map(|i| Complex64::from_polar(1.0, k * m as f64 * grid.coord(i))).collect())
        .collect();
    let at = |m: f64| (m as i64 + band) as usize;
    let mut comps = vec![vec![0.0; grid.len()]; rank.components()];
    for idx in 0..grid.len() {
        let [i, j, l] = grid.unindex(idx);
        for (m, co) in &modes {
            let e = axis[at(m[0])][i] * axis[at(m[1])][j] * axis[at(m[2])][l];
            for (c, out) in comps.iter_mut().enumerate() {
                out[idx] += co[c].0 * e.re + co[c].1 * e.im;
            }
        }
    }
    Field::from_components(grid, comps).unwrap()
}

/// Divergence-free version of a random vector field.
pub fn solenoidal_field(grid: BoxGrid, band: i64, seed: u64) -> Field {
    let u = trig_field(grid, Rank::Vector, band, seed);
    leray_project(&u.to_spectral().unwrap()).unwrap().to_physical()
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

/// Relative L2 difference on the lattice.
pub fn relative_l2(a: &Field, b: &Field) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (ca, cb) in a.components().iter().zip(b.components()) {
        for (x, y) in ca.iter().zip(cb) {
            num += (x - y) * (x - y);
            den += y * y;
        }
    }
    (num / den).sqrt()
}
