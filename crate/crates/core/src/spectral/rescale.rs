use super::field::{Field, Rank};
use super::ops::{apply_diff, jacobian, second_derivative, DiffOp};
use crate::error::{Error, Result};

/// Both sides of the scaling law for `f_alpha(x) = f(x/alpha)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub alpha: f64,
    pub p: f64,
    pub order: u32,
    /// `||D^k f||_{L^p(Q_1)}`.
    pub base: f64,
    /// `||D^k f_alpha||_{L^p(Q_alpha)}`, measured on the rescaled lattice.
    pub measured: f64,
    /// `alpha^(3/p - k) * base`.
    pub predicted: f64,
}

impl ScalingReport {
    /// `measured / base`.
    pub fn ratio(&self) -> f64 {
        self.measured / self.base
    }

    pub fn relative_error(&self) -> f64 {
        if self.predicted == 0.0 {
            self.measured.abs()
        } else {
            (self.measured - self.predicted).abs() / self.predicted.abs()
        }
    }
}

/// Lattice `L^p` norm of the pointwise Euclidean magnitude of all order-`k` derivatives.
///
/// `k = 1` collects every `d_j f_i`, `k = 2` every `d_a d_b f_i` (so the
/// magnitude is the Frobenius norm of the Hessian per component).
pub fn derivative_lp_norm(f: &Field, p: f64, order: u32) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Usage(format!("Lebesgue exponent must be at least 1, got {p}")));
    }
    let grid = *f.grid();
    let comps: Vec<Vec<f64>> = match order {
        0 => f.components().to_vec(),
        1 => {
            let s = f.to_spectral()?;
            if f.rank() == Rank::Scalar {
                apply_diff(DiffOp::Gradient, &s)?.to_physical().into_components()
            } else {
                let jac = jacobian(&s);
                let refs: Vec<&[_]> = jac.iter().map(|c| c.as_slice()).collect();
                super::fft::plan(grid.n()).inverse_real_many(&refs)
            }
        }
        2 => {
            let s = f.to_spectral()?;
            let mut out = Vec::new();
            for a in 0..3 {
                for b in 0..3 {
                    out.extend(second_derivative(&s, a, b)?.to_physical().into_components());
                }
            }
            out
        }
        k => {
            return Err(Error::Usage(format!(
                "derivative order must be 0, 1 or 2, got {k}"
            )))
        }
    };
    let len = grid.len();
    if p.is_infinite() {
        let mut m = 0.0f64;
        for idx in 0..len {
            let sq: f64 = comps.iter().map(|c| c[idx] * c[idx]).sum();
            m = m.max(sq.sqrt());
        }
        return Ok(m);
    }
    let mut acc = 0.0;
    for idx in 0..len {
        let sq: f64 = comps.iter().map(|c| c[idx] * c[idx]).sum();
        acc += if p == 2.0 { sq } else { sq.powf(0.5 * p) };
    }
    Ok((acc * grid.cell_volume()).powf(1.0 / p))
}

/// Rescale `f` from `Q_1` to `Q_alpha` and compare both sides of
/// `||D^k f_alpha||_{L^p(Q_alpha)} = alpha^(3/p - k) ||D^k f||_{L^p(Q_1)}`.
///
/// The rescaled field keeps the sample count, so its lattice values are the
/// samples of `f` itself.
pub fn rescale_field(f: &Field, alpha: f64, p: f64, order: u32) -> Result<ScalingReport> {
    if order > 2 {
        return Err(Error::Usage(format!(
            "derivative order must be 0, 1 or 2, got {order}"
        )));
    }
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::Usage(format!("rescaling needs finite p >= 1, got {p}")));
    }
    if (f.grid().alpha() - 1.0).abs() > 1e-14 {
        return Err(Error::Usage("rescaling starts from a field on Q_1".into()));
    }
    let scaled_grid = f.grid().scaled(alpha)?;
    let scaled = Field::from_components(scaled_grid, f.components().to_vec())?;
    let base = derivative_lp_norm(f, p, order)?;
    let measured = derivative_lp_norm(&scaled, p, order)?;
    let predicted = alpha.powf(3.0 / p - order as f64) * base;
    Ok(ScalingReport {
        alpha,
        p,
        order,
        base,
        measured,
        predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::BoxGrid;
    use std::f64::consts::PI;

    fn sine() -> Field {
        Field::scalar_from_fn(BoxGrid::new(1.0, 16).unwrap(), |x| (PI * x[0]).sin())
    }

    #[test]
    fn l2_ratio_of_sine() {
        let r = rescale_field(&sine(), 2.0, 2.0, 0).unwrap();
        assert!((r.ratio() - 2f64.powf(1.5)).abs() < 1e-12);
        assert!(r.relative_error() < 1e-12);
    }

    #[test]
    fn gradient_ratio_of_sine() {
        let r = rescale_field(&sine(), 2.0, 2.0, 1).unwrap();
        assert!((r.ratio() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identity_rescaling() {
        for (p, k) in [(2.0, 0), (3.0, 1), (4.0, 2)] {
            let r = rescale_field(&sine(), 1.0, p, k).unwrap();
            assert!((r.ratio() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_third_derivatives() {
        assert!(matches!(rescale_field(&sine(), 2.0, 2.0, 3), Err(Error::Usage(_))));
    }
}
