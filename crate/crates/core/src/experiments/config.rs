use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::{
    bump_velocity, bump_vorticity, trefoil_vorticity, BumpSpec, TrefoilSpec,
};
use crate::norms::NormKind;
use crate::solver::SolverConfig;
use crate::spectral::{apply_diff, BoxGrid, DiffOp, Field, Rank};
use crate::vorticity::{curl_inv_periodic, VorticityField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Inversion,
    Solution,
    Tail,
    Transfer,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Inversion => "inversion",
            StudyKind::Solution => "solution",
            StudyKind::Tail => "tail",
            StudyKind::Transfer => "transfer",
        }
    }
}

/// Initial data family, selected by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `omega = curl A`; the velocity is its periodic curl inverse on each box.
    BumpVorticity(BumpSpec),
    /// `u = curl A` itself, compactly supported.
    BumpVelocity(BumpSpec),
    Trefoil(TrefoilSpec),
    Zero,
}

impl InitialData {
    /// Radius of a ball containing the support of the generating data.
    pub fn support_radius(&self) -> f64 {
        match self {
            InitialData::BumpVorticity(b) | InitialData::BumpVelocity(b) => b.support_radius,
            InitialData::Trefoil(t) => t.support_radius(),
            InitialData::Zero => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitialData::BumpVorticity(b) | InitialData::BumpVelocity(b) => b.validate(),
            InitialData::Trefoil(t) => t.validate(),
            InitialData::Zero => Ok(()),
        }
    }

    /// Vorticity sampled on `grid`.
    pub fn vorticity(&self, grid: &BoxGrid) -> Result<VorticityField> {
        match self {
            InitialData::BumpVorticity(b) => bump_vorticity(b, grid),
            InitialData::BumpVelocity(b) => {
                let u = bump_velocity(b, grid)?.to_spectral()?;
                let w = apply_diff(DiffOp::Curl, &u)?.to_physical();
                VorticityField::new(w, b.support_radius)
            }
            InitialData::Trefoil(t) => Ok(trefoil_vorticity(t, grid)?.0),
            InitialData::Zero => VorticityField::new(Field::zeros(*grid, Rank::Vector), grid.h()),
        }
    }

    /// Initial velocity on `grid`.
    pub fn velocity(&self, grid: &BoxGrid) -> Result<Field> {
        match self {
            InitialData::BumpVelocity(b) => bump_velocity(b, grid),
            InitialData::Zero => Ok(Field::zeros(*grid, Rank::Vector)),
            _ => curl_inv_periodic(&self.vorticity(grid)?),
        }
    }
}

/// `L^r` in time of the `H^{1+s}` error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeNorm {
    pub r: f64,
    pub s: f64,
}

impl TimeNorm {
    pub fn column(&self) -> String {
        format!("err_L{}t_H{}", self.r, 1.0 + self.s)
    }
}

fn default_time_norms() -> Vec<TimeNorm> {
    vec![TimeNorm { r: 2.0, s: 0.0 }, TimeNorm { r: 4.0, s: 0.5 }]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSettings {
    #[serde(default = "default_time_norms")]
    pub time_norms: Vec<TimeNorm>,
    /// Radius of the sup-in-time tail column; defaults to the smallest box half-width.
    #[serde(default)]
    pub tail_radius: Option<f64>,
}

impl Default for SolutionSettings {
    fn default() -> Self {
        SolutionSettings {
            time_norms: default_time_norms(),
            tail_radius: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSettings {
    /// Inner radius `r` of the cutoff ramp.
    pub inner_radius: f64,
    /// Outer radii `R`.
    pub radii: Vec<f64>,
}

fn default_t_star_factor() -> f64 {
    3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSettings {
    /// `T* = factor * T_guaranteed(M)`.
    #[serde(default = "default_t_star_factor")]
    pub t_star_factor: f64,
}

impl Default for TransferSettings {
    fn default() -> Self {
        TransferSettings {
            t_star_factor: default_t_star_factor(),
        }
    }
}

fn default_norms() -> Vec<String> {
    vec!["L2".into(), "H1".into()]
}

/// A study read from a TOML file. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub kind: StudyKind,
    /// Box half-widths, strictly ascending.
    pub alphas: Vec<f64>,
    /// Samples per axis on the first box; the others share its spacing.
    pub base_n: usize,
    /// Half-width of the reference box; defaults to twice the largest alpha.
    #[serde(default)]
    pub reference_alpha: Option<f64>,
    #[serde(default = "default_norms")]
    pub norms: Vec<String>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Run past the guaranteed existence time instead of refusing.
    #[serde(default)]
    pub allow_beyond_guarantee: bool,
    /// Agmon constant; measured from the initial data when absent.
    #[serde(default)]
    pub agmon_constant: Option<f64>,
    pub initial_data: InitialData,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub solution: Option<SolutionSettings>,
    #[serde(default)]
    pub tail: Option<TailSettings>,
    #[serde(default)]
    pub transfer: Option<TransferSettings>,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StudyConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a study configuration, or the `[config]` table of a report's `metadata.toml`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: toml::Table =
            toml::from_str(&text).map_err(|e| Error::Config(e.message().to_string()))?;
        if table.get("format").and_then(|f| f.as_str()) == Some(super::REPORT_FORMAT) {
            return Self::from_report_table(&table, path);
        }
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("study config serialises")
    }

    /// The `[config]` table of a report's `metadata.toml`.
    pub fn from_metadata(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: toml::Table =
            toml::from_str(&text).map_err(|e| Error::Config(e.message().to_string()))?;
        Self::from_report_table(&table, path)
    }

    fn from_report_table(table: &toml::Table, path: &Path) -> Result<Self> {
        let config = table
            .get("config")
            .ok_or_else(|| Error::Config(format!("{} has no [config] table", path.display())))?;
        let cfg: StudyConfig = config
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.alphas[0] / self.base_n as f64
    }

    pub fn reference(&self) -> f64 {
        self.reference_alpha
            .unwrap_or_else(|| 2.0 * self.alphas.last().copied().unwrap_or(0.0))
    }

    pub fn grid(&self, alpha: f64) -> Result<BoxGrid> {
        BoxGrid::with_spacing(alpha, self.spacing())
    }

    pub fn reference_grid(&self) -> Result<BoxGrid> {
        self.grid(self.reference())
    }

    pub fn parsed_norms(&self) -> Result<Vec<NormKind>> {
        self.norms.iter().map(|s| s.parse()).collect()
    }

    pub fn solver_config(&self) -> Result<&SolverConfig> {
        self.solver
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{} study needs a [solver] table", self.kind.name())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::Config("alpha list is empty".into()));
        }
        if self.alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Config("box half-widths must be positive".into()));
        }
        if self.alphas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("alphas must be strictly ascending".into()));
        }
        BoxGrid::new(self.alphas[0], self.base_n)?;
        for &a in &self.alphas {
            self.grid(a)?;
        }
        let beta = self.reference();
        let largest = *self.alphas.last().unwrap();
        if beta < largest {
            return Err(Error::Config(format!(
                "reference box {beta} is smaller than the largest box {largest}"
            )));
        }
        self.reference_grid()?;
        self.initial_data.validate()?;
        let support = self.initial_data.support_radius();
        if support >= self.alphas[0] {
            return Err(Error::DomainTooSmall {
                radius: support,
                alpha: self.alphas[0],
            });
        }
        for n in self.parsed_norms()? {
            if !n.is_spectral() {
                return Err(Error::Config(format!(
                    "norm {n} is not available in studies; use L2 or Sobolev norms"
                )));
            }
        }
        if let Some(c) = self.agmon_constant {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config("Agmon constant must be positive".into()));
            }
        }
        if let Some(s) = &self.solver {
            s.validate()?;
        }
        match self.kind {
            StudyKind::Inversion => {
                if beta < largest + 1.0 {
                    return Err(Error::Config(format!(
                        "reference box {beta} must contain the extension of Q_{largest}"
                    )));
                }
            }
            StudyKind::Solution => {
                self.solver_config()?;
                if beta < largest + 1.0 {
                    return Err(Error::Config(format!(
                        "reference box {beta} must contain the extension of Q_{largest}"
                    )));
                }
                let settings = self.solution.clone().unwrap_or_default();
                for tn in &settings.time_norms {
                    if !(tn.r >= 1.0 && tn.r.is_finite() && tn.s >= 0.0 && tn.s.is_finite()) {
                        return Err(Error::Config("time norms need r >= 1 and s >= 0".into()));
                    }
                }
                if let Some(r) = settings.tail_radius {
                    if !(r > 0.0) {
                        return Err(Error::Config("tail radius must be positive".into()));
                    }
                }
            }
            StudyKind::Tail => {
                self.solver_config()?;
                let tail = self
                    .tail
                    .as_ref()
                    .ok_or_else(|| Error::Config("tail study needs a [tail] table".into()))?;
                let r = tail.inner_radius;
                if !(r > support) {
                    return Err(Error::Config(format!(
                        "inner radius {r} must exceed the data support radius {support}"
                    )));
                }
                if tail.radii.is_empty() {
                    return Err(Error::Config("tail study needs at least one outer radius".into()));
                }
                for &big_r in &tail.radii {
                    if !(big_r > r) {
                        return Err(Error::Config(format!(
                            "outer radius {big_r} must exceed the inner radius {r}"
                        )));
                    }
                    if big_r >= self.alphas[0] {
                        return Err(Error::Config(format!(
                            "outer radius {big_r} must lie inside Q_{}",
                            self.alphas[0]
                        )));
                    }
                }
            }
            StudyKind::Transfer => {
                self.solver_config()?;
                let factor = self.transfer.clone().unwrap_or_default().t_star_factor;
                if !(factor > 0.0 && factor.is_finite()) {
                    return Err(Error::Config("T* factor must be positive".into()));
                }
                if self.solver_config()?.viscosity != 1.0 {
                    return Err(Error::Config(
                        "the existence-time estimate assumes unit viscosity".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}
