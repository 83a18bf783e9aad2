//! Run configuration read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::continuation::{ProbeOptions, ScheduleOptions};
use crate::data::{builtin_family, FamilyConfig, BUILTIN_FAMILIES};
use crate::error::{Error, Result};
use crate::geometry::{EpsilonWindow, SurfaceSpec};
use crate::holder::HolderConfig;
use crate::poly::Polynomial;
use crate::potential::NormalDerivativeMode;
use crate::system::{PdeCheckOptions, SolverOptions};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridConfig {
    Geometric { first: f64, last: f64, count: usize },
    List { values: Vec<f64> },
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig::Geometric { first: 1e-3, last: 0.2, count: 12 }
    }
}

/// Probe settings; seed and alpha come from the top level of the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSettings {
    pub ladder: Vec<f64>,
    pub samples: usize,
    pub merge_tol: f64,
    pub max_picard: usize,
    pub newton_checks: usize,
    pub schedule: ScheduleOptions,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        let p = ProbeOptions::default();
        ProbeSettings {
            ladder: p.ladder,
            samples: p.samples,
            merge_tol: p.merge_tol,
            max_picard: p.max_picard,
            newton_checks: p.newton_checks,
            schedule: ScheduleOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub solver: SolverOptions,
    /// Largest accepted PDE residual of a solved state.
    pub pde: f64,
    /// Largest accepted field error against exact fields.
    pub field: f64,
    pub pde_check: PdeCheckOptions,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { solver: SolverOptions::default(), pde: 1e-5, field: 1e-6, pde_check: PdeCheckOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub outer: SurfaceSpec,
    pub inner: SurfaceSpec,
    pub order: usize,
    pub alpha: f64,
    /// One of [`BUILTIN_FAMILIES`]; excludes `family`.
    pub builtin: Option<String>,
    pub family: Option<FamilyConfig>,
    /// Harmonic polynomial for the outer Dirichlet data.
    pub f_outer: Option<Polynomial>,
    pub normal_derivative: Option<NormalDerivativeMode>,
    /// Target of `solve` when `--epsilon` is absent.
    pub epsilon: Option<f64>,
    pub epsilon_grid: GridConfig,
    pub tolerances: Tolerances,
    pub fit_degree: usize,
    pub probe: ProbeSettings,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            outer: SurfaceSpec::UnitSphere,
            inner: SurfaceSpec::UnitSphere,
            order: 12,
            alpha: 0.5,
            builtin: Some("polynomial".into()),
            family: None,
            f_outer: None,
            normal_derivative: None,
            epsilon: None,
            epsilon_grid: GridConfig::default(),
            tolerances: Tolerances::default(),
            fit_degree: 8,
            probe: ProbeSettings::default(),
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_json(&text)?)
    }

    /// Checks that do not need any assembly.
    pub fn check(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.outer.validate()?;
        self.inner.validate()?;
        self.holder().validate()?;
        if self.order < 2 {
            return Err(Error::Config(format!("order must be at least 2, got {}", self.order)));
        }
        if self.probe.ladder.is_empty() || self.probe.ladder.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Config("probe ladder must be non-empty and positive".into()));
        }
        self.problem()?;
        self.window()?;
        Ok(())
    }

    pub fn holder(&self) -> HolderConfig {
        HolderConfig { alpha: self.alpha, seed: self.seed, ..HolderConfig::default() }
    }

    /// Outer data and family.
    pub fn problem(&self) -> Result<(Polynomial, FamilyConfig)> {
        let (f_default, family) = match (&self.builtin, &self.family) {
            (Some(name), None) => builtin_family(name).ok_or_else(|| {
                Error::Config(format!("unknown builtin family `{name}`; expected one of {BUILTIN_FAMILIES:?}"))
            })?,
            (None, Some(f)) => (Polynomial::default(), f.clone()),
            (Some(_), Some(_)) => return Err(Error::Config("give either `builtin` or `family`, not both".into())),
            (None, None) => return Err(Error::Config("a `builtin` or `family` entry is required".into())),
        };
        let f = match (family.forced_boundary_data(), &self.f_outer) {
            (Some(forced), Some(given)) if forced.simplified() != given.simplified() => {
                return Err(Error::Config("manufactured families fix `f_outer`".into()))
            }
            (Some(forced), _) => forced,
            (None, Some(given)) => given.clone(),
            (None, None) if self.builtin.is_some() => f_default,
            (None, None) => return Err(Error::Config("`f_outer` is required with a custom family".into())),
        };
        if !f.is_harmonic(1e-12) {
            return Err(Error::Config("`f_outer` must be a harmonic polynomial".into()));
        }
        Ok((f, family))
    }

    pub fn window(&self) -> Result<EpsilonWindow> {
        match &self.epsilon_grid {
            GridConfig::Geometric { first, last, count } => {
                EpsilonWindow::geometric(&self.outer, &self.inner, *first, *last, *count)
            }
            GridConfig::List { values } => EpsilonWindow::new(&self.outer, &self.inner, values.clone()),
        }
    }

    pub fn probe_options(&self, seed: u64) -> ProbeOptions {
        ProbeOptions {
            ladder: self.probe.ladder.clone(),
            samples: self.probe.samples,
            seed,
            merge_tol: self.probe.merge_tol,
            max_picard: self.probe.max_picard,
            newton_checks: self.probe.newton_checks,
            holder: self.holder(),
            solver: self.tolerances.solver,
        }
    }
}
