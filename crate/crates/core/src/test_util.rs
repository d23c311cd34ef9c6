use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spectral::{BoxGrid, Complex64, Rank, SpectralField};

/// Random real field whose modes satisfy `|m_i| <= band`, with coefficients decaying like `1/(1+|m|^2)`.
pub fn random_spectral(grid: BoxGrid, rank: Rank, band: i64, zero_mean: bool, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SpectralField::zeros(grid, rank);
    for c in 0..rank.components() {
        for m2 in -band..=band {
            for m1 in -band..=band {
                for m0 in -band..=band {
                    let m = [m0, m1, m2];
                    // visit each conjugate pair once
                    if (m2, m1, m0) < (0, 0, 0) {
                        continue;
                    }
                    if m == [0, 0, 0] && zero_mean {
                        continue;
                    }
                    let decay = 1.0 / (1.0 + (m0 * m0 + m1 * m1 + m2 * m2) as f64);
                    let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay;
                    s.set_mode(c, m, v);
                }
            }
        }
    }
    s
}

pub fn random_solenoidal(grid: BoxGrid, band: i64, seed: u64) -> SpectralField {
    crate::spectral::leray_project(&random_spectral(grid, Rank::Vector, band, true, seed)).unwrap()
}
