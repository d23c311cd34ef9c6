//! Smooth cutoff `psi_alpha`, extension of periodic fields to a larger box and
//! restriction back to `Q_alpha`.

use crate::error::{Error, Result};
use crate::spectral::{BoxGrid, Field};

/// `max |zeta'|` of the quintic smoothstep profile.
pub const ZETA_PRIME_MAX: f64 = 15.0 / 8.0;

/// `max |zeta''|`, reached at `t = 1/2 -+ 1/(2 sqrt 3)`.
pub fn zeta_second_max() -> f64 {
    10.0 / 3f64.sqrt()
}

/// Quintic smoothstep `6t^5 - 15t^4 + 10t^3` on `[0, 1]`, clamped outside.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

fn smoothstep_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (t - 1.0) * (t - 1.0)
    }
}

fn smoothstep_second(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        60.0 * t * (2.0 * t * t - 3.0 * t + 1.0)
    }
}

/// Tensor-product cutoff equal to 1 on `[-alpha, alpha]^3` and 0 outside `[-(alpha+1), alpha+1]^3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    alpha: f64,
}

pub fn make_cutoff(alpha: f64) -> Result<Cutoff> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(Error::Config(format!("cutoff half-width must be at least 1, got {alpha}")));
    }
    Ok(Cutoff { alpha })
}

impl Cutoff {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Bound on `|grad psi|`: `sqrt(3) * 15/8`.
    pub fn m1(&self) -> f64 {
        3f64.sqrt() * ZETA_PRIME_MAX
    }

    /// Bound on the Frobenius norm of the Hessian of `psi`.
    ///
    /// Diagonal entries are bounded by `max|zeta''|`, off-diagonal ones by `(15/8)^2`.
    pub fn m2(&self) -> f64 {
        (3.0 * zeta_second_max().powi(2) + 6.0 * ZETA_PRIME_MAX.powi(4)).sqrt()
    }

    /// Gradient-bound constant `max(26 M1, 27)`.
    pub fn e2(&self) -> f64 {
        (26.0 * self.m1()).max(27.0)
    }

    /// `H^2` constant `max(27 M2, 52 M1, 27)`.
    pub fn e3(&self) -> f64 {
        (27.0 * self.m2()).max(52.0 * self.m1()).max(27.0)
    }

    /// Per-axis profile.
    pub fn zeta(&self, s: f64) -> f64 {
        1.0 - smoothstep(s.abs() - self.alpha)
    }

    pub fn zeta_prime(&self, s: f64) -> f64 {
        -s.signum() * smoothstep_prime(s.abs() - self.alpha)
    }

    pub fn zeta_second(&self, s: f64) -> f64 {
        -smoothstep_second(s.abs() - self.alpha)
    }

    pub fn psi(&self, x: [f64; 3]) -> f64 {
        self.zeta(x[0]) * self.zeta(x[1]) * self.zeta(x[2])
    }

    pub fn grad_psi(&self, x: [f64; 3]) -> [f64; 3] {
        let z = [self.zeta(x[0]), self.zeta(x[1]), self.zeta(x[2])];
        let d = [
            self.zeta_prime(x[0]),
            self.zeta_prime(x[1]),
            self.zeta_prime(x[2]),
        ];
        [d[0] * z[1] * z[2], z[0] * d[1] * z[2], z[0] * z[1] * d[2]]
    }
}

fn check_shared_spacing(a: &BoxGrid, b: &BoxGrid) -> Result<()> {
    if !a.shares_spacing(b) {
        return Err(Error::GridMismatch {
            left: a.h(),
            right: b.h(),
        });
    }
    Ok(())
}

/// `psi_alpha * u^p` sampled on the target lattice, `u^p` the periodic extension of `u`.
pub fn extend_field(u: &Field, target: &BoxGrid, cutoff: &Cutoff) -> Result<Field> {
    let src = *u.grid();
    check_shared_spacing(&src, target)?;
    if (cutoff.alpha() - src.alpha()).abs() > 1e-12 * src.alpha() {
        return Err(Error::Usage(format!(
            "cutoff is built for Q_{} but the field lives on Q_{}",
            cutoff.alpha(),
            src.alpha()
        )));
    }
    let required = src.alpha() + 1.0;
    if target.alpha() < required - 1e-12 {
        return Err(Error::TruncatedSupport {
            target: target.alpha(),
            required,
        });
    }
    let (ns, nt) = (src.n(), target.n());
    let off = (nt - ns) / 2;
    // per-axis weights and wrapped source indices
    let weights: Vec<f64> = (0..nt).map(|j| cutoff.zeta(target.coord(j))).collect();
    let wrap: Vec<usize> = (0..nt).map(|j| (j + ns * nt - off) % ns).collect();
    let mut out = Field::zeros(*target, u.rank());
    for c in 0..u.components().len() {
        let s = u.component(c);
        let t = out.component_mut(c);
        for k in 0..nt {
            if weights[k] == 0.0 {
                continue;
            }
            for j in 0..nt {
                let wjk = weights[j] * weights[k];
                if wjk == 0.0 {
                    continue;
                }
                let row = src.index(0, wrap[j], wrap[k]);
                let base = target.index(0, j, k);
                for i in 0..nt {
                    if weights[i] != 0.0 {
                        t[base + i] = wjk * weights[i] * s[row + wrap[i]];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Bookkeeping returned by [`restrict_field`].
#[derive(Clone, Debug, PartialEq)]
pub struct Restriction {
    pub field: Field,
    /// `||u||_{L^2}` outside `Q_alpha` relative to `||u||_{L^2}`.
    pub leak: f64,
    /// Euclidean norm of the per-component mean that was subtracted.
    pub subtracted_mean: f64,
}

/// Tolerance on the relative `L^2` mass outside the target box.
pub const RESTRICTION_TOLERANCE: f64 = 1e-8;

/// Copy of the `Q_alpha` sub-lattice of `u` with no support or mean handling.
pub fn restrict_samples(u: &Field, alpha: f64) -> Result<Field> {
    let big = *u.grid();
    let small = BoxGrid::with_spacing(alpha, big.h())?;
    if small.n() > big.n() {
        return Err(Error::Usage(format!(
            "cannot restrict from Q_{} to the larger box Q_{alpha}",
            big.alpha()
        )));
    }
    let off = (big.n() - small.n()) / 2;
    let ns = small.n();
    let mut comps = vec![vec![0.0; small.len()]; u.components().len()];
    for (c, comp) in comps.iter_mut().enumerate() {
        let s = u.component(c);
        for k in 0..ns {
            for j in 0..ns {
                let dst = small.index(0, j, k);
                let src = big.index(off, j + off, k + off);
                comp[dst..dst + ns].copy_from_slice(&s[src..src + ns]);
            }
        }
    }
    Field::from_components(small, comps)
}

/// Copy the `Q_alpha` sub-lattice of `u` and subtract its mean.
///
/// Refuses fields with relative `L^2` mass above [`RESTRICTION_TOLERANCE`]
/// outside `Q_alpha`, since those would not be periodic there.
pub fn restrict_field(u: &Field, alpha: f64) -> Result<Restriction> {
    let small = restrict_samples(u, alpha)?;
    let mut comps = small.into_components();
    let small = BoxGrid::with_spacing(alpha, u.grid().h())?;
    let total: f64 = u.components().iter().flatten().map(|v| v * v).sum();
    let kept: f64 = comps.iter().flatten().map(|v| v * v).sum();
    let leak = if total == 0.0 {
        0.0
    } else {
        ((total - kept).max(0.0) / total).sqrt()
    };
    if leak > RESTRICTION_TOLERANCE {
        return Err(Error::Support { leak });
    }
    let mut mean_sq = 0.0;
    for comp in comps.iter_mut() {
        let mean = comp.iter().sum::<f64>() / comp.len() as f64;
        mean_sq += mean * mean;
        for v in comp.iter_mut() {
            *v -= mean;
        }
    }
    Ok(Restriction {
        field: Field::from_components(small, comps)?,
        leak,
        subtracted_mean: mean_sq.sqrt(),
    })
}
