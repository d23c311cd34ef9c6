//! Lebesgue and Sobolev norms, tail masses, and the constant audits used by
//! the convergence studies.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spectral::{Field, SpectralField};

pub fn lebesgue_norm(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Usage(format!("Lebesgue exponent must be at least 1, got {p}")));
    }
    if p == 2.0 {
        return Ok(f.to_spectral()?.l2_norm());
    }
    if !f.is_finite() {
        return Err(Error::Data("field contains non-finite samples".into()));
    }
    Ok(f.lattice_lp_norm(p))
}

fn sobolev_weight(s: f64, homogeneous: bool) -> impl Fn(f64) -> f64 {
    move |k2: f64| {
        if homogeneous {
            if k2 == 0.0 {
                0.0
            } else {
                k2.powf(s)
            }
        } else {
            (1.0 + k2).powf(s)
        }
    }
}

/// Squared `H^s` (or homogeneous `H^s`) norm from Fourier coefficients.
pub fn sobolev_norm_sq(f: &SpectralField, s: f64, homogeneous: bool) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Usage(format!("Sobolev index must be nonnegative, got {s}")));
    }
    Ok(if s == 0.0 && !homogeneous {
        f.norm_sq()
    } else if s == 1.0 && homogeneous {
        f.weighted_norm_sq(|k2| k2)
    } else if s == 2.0 && homogeneous {
        f.weighted_norm_sq(|k2| k2 * k2)
    } else {
        f.weighted_norm_sq(sobolev_weight(s, homogeneous))
    })
}

pub fn sobolev_norm_spectral(f: &SpectralField, s: f64, homogeneous: bool) -> Result<f64> {
    Ok(sobolev_norm_sq(f, s, homogeneous)?.sqrt())
}

/// `(sum_k w_s(k) |f_k|^2 vol)^(1/2)` with `w_s = |k|^{2s}` (homogeneous) or `(1+|k|^2)^s`.
pub fn sobolev_norm(f: &Field, s: f64, homogeneous: bool) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Usage(format!("Sobolev index must be nonnegative, got {s}")));
    }
    sobolev_norm_spectral(&f.to_spectral()?, s, homogeneous)
}

/// `sum_{|x| >= R} |f(x)|^2 h^3` over lattice points, `|x|` measured from the box center.
pub fn tail_mass(f: &Field, radius: f64) -> f64 {
    let grid = f.grid();
    let r2 = radius * radius;
    let mut acc = 0.0;
    for idx in 0..grid.len() {
        let x = grid.point(idx);
        if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] >= r2 {
            acc += f.components().iter().map(|c| c[idx] * c[idx]).sum::<f64>();
        }
    }
    acc * grid.cell_volume()
}

/// Tail masses for several radii in one lattice sweep.
pub fn tail_masses(f: &Field, radii: &[f64]) -> Vec<f64> {
    let grid = f.grid();
    let mut acc = vec![0.0; radii.len()];
    for idx in 0..grid.len() {
        let x = grid.point(idx);
        let d2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let v: f64 = f.components().iter().map(|c| c[idx] * c[idx]).sum();
        for (a, r) in acc.iter_mut().zip(radii) {
            if d2 >= r * r {
                *a += v;
            }
        }
    }
    acc.iter().map(|a| a * grid.cell_volume()).collect()
}

/// A norm requested by name in a study configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    /// `L^p`, `p = inf` allowed.
    Lebesgue(f64),
    /// Inhomogeneous `H^s`.
    Sobolev(f64),
    /// Homogeneous `H^s`.
    HomogeneousSobolev(f64),
}

impl NormKind {
    /// Evaluate on a field with both representations at hand.
    pub fn evaluate(&self, physical: &Field, spectral: &SpectralField) -> Result<f64> {
        match *self {
            NormKind::Lebesgue(p) if p == 2.0 => Ok(spectral.l2_norm()),
            NormKind::Lebesgue(p) => lebesgue_norm(physical, p),
            NormKind::Sobolev(s) => sobolev_norm_spectral(spectral, s, false),
            NormKind::HomogeneousSobolev(s) => sobolev_norm_spectral(spectral, s, true),
        }
    }

    /// Whether the norm is computable from Fourier coefficients alone.
    pub fn is_spectral(&self) -> bool {
        !matches!(*self, NormKind::Lebesgue(p) if p != 2.0)
    }

    pub fn evaluate_spectral(&self, spectral: &SpectralField) -> Result<f64> {
        match *self {
            NormKind::Lebesgue(p) if p == 2.0 => Ok(spectral.l2_norm()),
            NormKind::Lebesgue(_) => self.evaluate(&spectral.to_physical(), spectral),
            NormKind::Sobolev(s) => sobolev_norm_spectral(spectral, s, false),
            NormKind::HomogeneousSobolev(s) => sobolev_norm_spectral(spectral, s, true),
        }
    }
}

impl FromStr for NormKind {
    type Err = Error;

    /// Accepts `L2`, `L4`, `Linf`, `H1`, `H1.5`, `Hs(1.5)`, `Hdot1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown norm {s:?}"));
        let num = |t: &str| -> Result<f64> {
            let t = t.strip_prefix('(').and_then(|t| t.strip_suffix(')')).unwrap_or(t);
            let v: f64 = t.parse().map_err(|_| bad())?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        if let Some(rest) = s.strip_prefix('L') {
            if rest == "inf" {
                return Ok(NormKind::Lebesgue(f64::INFINITY));
            }
            let p = num(rest)?;
            if p < 1.0 {
                return Err(bad());
            }
            return Ok(NormKind::Lebesgue(p));
        }
        let (rest, homogeneous) = if let Some(r) = s.strip_prefix("Hdot") {
            (r, true)
        } else if let Some(r) = s.strip_prefix("Hs") {
            (r, false)
        } else if let Some(r) = s.strip_prefix('H') {
            (r, false)
        } else {
            return Err(bad());
        };
        let v = num(rest)?;
        if v < 0.0 {
            return Err(bad());
        }
        Ok(if homogeneous {
            NormKind::HomogeneousSobolev(v)
        } else {
            NormKind::Sobolev(v)
        })
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::Lebesgue(p) if p.is_infinite() => write!(f, "Linf"),
            NormKind::Lebesgue(p) => write!(f, "L{p}"),
            NormKind::Sobolev(s) => write!(f, "H{s}"),
            NormKind::HomogeneousSobolev(s) => write!(f, "Hdot{s}"),
        }
    }
}

/// Named nonnegative quantities in insertion order, serialisable as one CSV row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormReport {
    entries: Vec<(String, f64)>,
    degenerate: bool,
}

impl NormReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert or overwrite an entry.
    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        let name = name.into();
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(e) => e.1 = value,
            None => self.entries.push((name, value)),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|e| e.1)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    /// Set when a ratio would be `0/0`; the affected entries are omitted.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn set_degenerate(&mut self, flag: bool) {
        self.degenerate = flag;
    }

    pub fn csv_header(&self) -> Vec<String> {
        self.entries.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn csv_row(&self) -> Vec<String> {
        self.entries.iter().map(|(_, v)| v.to_string()).collect()
    }

    pub fn is_valid(&self) -> bool {
        self.entries.iter().all(|(_, v)| v.is_finite() && *v >= 0.0)
    }
}

/// Named diagnostics at one time, with free-form flags for conditions that void a check.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub values: NormReport,
    pub flags: Vec<String>,
}

impl DiagnosticsRecord {
    pub fn new(time: f64, values: NormReport) -> Self {
        DiagnosticsRecord {
            time,
            values,
            flags: Vec::new(),
        }
    }

    pub fn flag(&mut self, name: &str) {
        if !self.flags.iter().any(|f| f == name) {
            self.flags.push(name.to_string());
        }
    }

    pub fn has_flag(&self, name: &str) -> bool {
        self.flags.iter().any(|f| f == name)
    }
}

pub const AGMON_RATIO: &str = "agmon_ratio";
pub const SOBOLEV6_RATIO: &str = "l6_ratio";
pub const INTERPOLATION_RATIO: &str = "interpolation_ratio";

/// Agmon, `L^6` and `H^1` interpolation ratios of a velocity field.
///
/// `u_inf / (|grad u|^(1/2) |lap u|^(1/2))`, `|u|_6 / |grad u|` and
/// `|u|_{H^1} / (|u|^(1/2) |u|_{H^2}^(1/2))`. The sup norm and `L^6` norm are
/// lattice quantities. With `zero_mean` set, a mean above `1e-12 |u|` is a data error.
pub fn inequality_report(u: &Field, zero_mean: bool) -> Result<NormReport> {
    let s = u.to_spectral()?;
    let l2 = s.l2_norm();
    if zero_mean {
        let mean: f64 = s.mean().iter().map(|m| m * m).sum::<f64>().sqrt() * s.grid().volume().sqrt();
        if mean > 1e-12 * l2.max(f64::MIN_POSITIVE) && l2 > 0.0 {
            return Err(Error::Data(format!(
                "field is not zero-mean (mean mass {mean:e} vs norm {l2:e})"
            )));
        }
    }
    inequality_report_spectral(u, &s)
}

pub(crate) fn inequality_report_spectral(u: &Field, s: &SpectralField) -> Result<NormReport> {
    let grad = sobolev_norm_spectral(s, 1.0, true)?;
    let lap = sobolev_norm_spectral(s, 2.0, true)?;
    let l2 = s.l2_norm();
    let h1 = sobolev_norm_spectral(s, 1.0, false)?;
    let h2 = sobolev_norm_spectral(s, 2.0, false)?;
    let sup = u.max_abs();
    let l6 = u.lattice_lp_norm(6.0);
    let mut r = NormReport::new();
    r.insert("L2", l2);
    r.insert("Linf", sup);
    r.insert("L6", l6);
    r.insert("grad", grad);
    r.insert("laplacian", lap);
    r.insert("H1", h1);
    r.insert("H2", h2);
    if grad == 0.0 || lap == 0.0 || l2 == 0.0 {
        r.set_degenerate(true);
        return Ok(r);
    }
    r.insert(AGMON_RATIO, sup / (grad.sqrt() * lap.sqrt()));
    r.insert(SOBOLEV6_RATIO, l6 / grad);
    r.insert(INTERPOLATION_RATIO, h1 / (l2.sqrt() * h2.sqrt()));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{BoxGrid, Complex64, Rank};
    use crate::test_util::random_spectral;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_lp_norms() {
        let alpha = 1.5;
        let g = BoxGrid::new(alpha, 8).unwrap();
        let f = Field::scalar_from_fn(g, |_| -2.0);
        for p in [1.0, 2.0, 3.0, 6.0] {
            let expected = 2.0 * (2.0 * alpha).powf(3.0 / p);
            assert!((lebesgue_norm(&f, p).unwrap() - expected).abs() < 1e-12 * expected);
        }
        assert_eq!(lebesgue_norm(&f, f64::INFINITY).unwrap(), 2.0);
        assert!(matches!(lebesgue_norm(&f, 0.5), Err(Error::Usage(_))));
    }

    #[test]
    fn sine_l2_norm() {
        let alpha = 2.0;
        let g = BoxGrid::new(alpha, 16).unwrap();
        let f = Field::scalar_from_fn(g, |x| (PI * x[0] / alpha).sin());
        let expected = (4.0 * alpha.powi(3)).sqrt();
        assert!((lebesgue_norm(&f, 2.0).unwrap() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn single_mode_sobolev() {
        let alpha = 2.0;
        let g = BoxGrid::new(alpha, 16).unwrap();
        let f = Field::scalar_from_fn(g, |x| (PI * x[1] / alpha).cos());
        let l2 = lebesgue_norm(&f, 2.0).unwrap();
        let h1 = sobolev_norm(&f, 1.0, true).unwrap();
        assert!((h1 - PI / alpha * l2).abs() < 1e-12 * h1);
        assert!(matches!(sobolev_norm(&f, -1.0, true), Err(Error::Usage(_))));
    }

    #[test]
    fn single_mode_interpolation_is_exact() {
        let g = BoxGrid::new(1.0, 16).unwrap();
        let mut s = SpectralField::zeros(g, Rank::Vector);
        s.set_mode(0, [0, 2, 1], Complex64::new(0.3, -0.2));
        let r = inequality_report(&s.to_physical(), true).unwrap();
        assert!((r.get(INTERPOLATION_RATIO).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field_is_degenerate() {
        let g = BoxGrid::new(1.0, 8).unwrap();
        let r = inequality_report(&Field::zeros(g, Rank::Vector), true).unwrap();
        assert!(r.is_degenerate());
        assert!(r.get(AGMON_RATIO).is_none());
        assert!(r.is_valid());
    }

    #[test]
    fn tail_of_compact_field_vanishes() {
        let g = BoxGrid::new(2.0, 16).unwrap();
        let f = Field::scalar_from_fn(g, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            if r2 < 0.25 {
                1.0 - 4.0 * r2
            } else {
                0.0
            }
        });
        assert_eq!(tail_mass(&f, 0.6), 0.0);
        assert!(tail_mass(&f, 0.0) > 0.0);
    }

    #[test]
    fn gaussian_tail_ratio_matches_fine_quadrature() {
        // Radial quadrature oracle for exp(-|x|^2): tail(R) = 4 pi int_R^inf r^2 e^{-2r^2} dr.
        let radial_tail = |big_r: f64| {
            let upper = 8.0;
            let steps = 200_000;
            let dr = (upper - big_r) / steps as f64;
            let f = |r: f64| 4.0 * PI * r * r * (-2.0 * r * r).exp();
            let mut acc = 0.5 * (f(big_r) + f(upper));
            for i in 1..steps {
                acc += f(big_r + i as f64 * dr);
            }
            acc * dr
        };
        let g = BoxGrid::new(4.0, 64).unwrap();
        let f = Field::scalar_from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());
        let (r1, r2) = (0.5, 1.0);
        let lattice = tail_mass(&f, r1) / tail_mass(&f, r2);
        let oracle = radial_tail(r1) / radial_tail(r2);
        assert!((lattice - oracle).abs() < 0.01 * oracle, "{lattice} vs {oracle}");
    }

    #[test]
    fn parse_and_display_names() {
        assert_eq!("L2".parse::<NormKind>().unwrap(), NormKind::Lebesgue(2.0));
        assert_eq!("H1.5".parse::<NormKind>().unwrap(), NormKind::Sobolev(1.5));
        assert_eq!("Hs(1.5)".parse::<NormKind>().unwrap(), NormKind::Sobolev(1.5));
        assert_eq!("Hdot1".parse::<NormKind>().unwrap(), NormKind::HomogeneousSobolev(1.0));
        assert_eq!("Linf".parse::<NormKind>().unwrap().to_string(), "Linf");
        assert_eq!(NormKind::Sobolev(1.5).to_string(), "H1.5");
        assert!("W1".parse::<NormKind>().is_err());
        assert!("L0.5".parse::<NormKind>().is_err());
    }

    #[test]
    fn report_row_is_stable() {
        let mut r = NormReport::new();
        r.insert("L2", 1.5);
        r.insert("H1", 2.0);
        r.insert("L2", 1.25);
        assert_eq!(r.csv_header(), vec!["L2", "H1"]);
        assert_eq!(r.csv_row(), vec!["1.25", "2"]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn parseval_two_ways(seed in any::<u64>()) {
            let g = BoxGrid::new(1.3, 16).unwrap();
            let s = random_spectral(g, Rank::Vector, 5, false, seed);
            let f = s.to_physical();
            let spectral = s.l2_norm();
            let lattice = f.lattice_lp_norm(2.0);
            prop_assert!((spectral - lattice).abs() <= 1e-12 * spectral);
        }

        #[test]
        fn poincare_and_second_derivatives(seed in any::<u64>()) {
            for alpha in [1.0, 2.0, 4.0] {
                let g = BoxGrid::new(alpha, 16).unwrap();
                let s = random_spectral(g, Rank::Scalar, 5, true, seed);
                let l2 = s.l2_norm();
                let h1 = sobolev_norm_spectral(&s, 1.0, true).unwrap();
                prop_assert!(l2 <= alpha / PI * h1 * (1.0 + 1e-12));
                let lap = sobolev_norm_spectral(&s, 2.0, true).unwrap();
                let mut hess = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        hess += crate::spectral::second_derivative(&s, a, b).unwrap().norm_sq();
                    }
                }
                prop_assert!(hess <= lap * lap * (1.0 + 1e-10));
                prop_assert!(hess <= 9.0 * lap * lap);
            }
        }

        #[test]
        fn sobolev_monotone_and_interpolation(seed in any::<u64>()) {
            let g = BoxGrid::new(1.0, 16).unwrap();
            let s = random_spectral(g, Rank::Vector, 5, true, seed);
            let h1 = sobolev_norm_spectral(&s, 1.0, false).unwrap();
            let h2 = sobolev_norm_spectral(&s, 2.0, false).unwrap();
            let mut last = 0.0;
            for sidx in [0.0, 0.5, 1.0, 1.5, 2.0] {
                let v = sobolev_norm_spectral(&s, sidx, true).unwrap();
                prop_assert!(v + 1e-12 * v >= last);
                last = v;
            }
            for theta in [0.25, 0.5, 0.75] {
                let mid = sobolev_norm_spectral(&s, 1.0 + theta, false).unwrap();
                prop_assert!(mid <= h1.powf(1.0 - theta) * h2.powf(theta) * (1.0 + 1e-10));
            }
        }

        #[test]
        fn tail_mass_monotone(seed in any::<u64>()) {
            let g = BoxGrid::new(2.0, 16).unwrap();
            let f = random_spectral(g, Rank::Vector, 4, false, seed).to_physical();
            let radii = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
            let tails = tail_masses(&f, &radii);
            for w in tails.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
            prop_assert!((tails[2] - tail_mass(&f, 1.0)).abs() <= 1e-12 * tails[2]);
        }
    }
}
