use std::path::{Path, PathBuf};

use burgers3d::moments::EnsembleConfig;
use burgers3d::noise::NoiseConfig;
use burgers3d::solver::{InitialCondition, SolverConfig};
use burgers3d::spectral::{DealiasRule, GridSpec};
use burgers3d::verify::ToleranceConfig;
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// Moment functionals the `ensemble` command can estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Functional {
    SupLp,
    SupLinf,
    LogH1,
    AlphaSup,
    AlphaPower,
    ExpMoment,
}

fn all_functionals() -> Vec<Functional> {
    vec![
        Functional::SupLp,
        Functional::SupLinf,
        Functional::LogH1,
        Functional::AlphaSup,
        Functional::AlphaPower,
        Functional::ExpMoment,
    ]
}

fn default_p() -> f64 {
    2.0
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// The `[ensemble]` section; solver and initial data come from their own sections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_paths: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub horizons: Vec<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "two")]
    pub big_q: f64,
    #[serde(default = "all_functionals")]
    pub functionals: Vec<Functional>,
}

impl EnsembleSection {
    pub fn new(n_paths: usize) -> Self {
        Self {
            n_paths,
            base_seed: 0,
            horizons: Vec::new(),
            p: default_p(),
            q: one(),
            big_q: two(),
            functionals: all_functionals(),
        }
    }
}

fn default_initial() -> InitialCondition {
    InitialCondition::SineShear { amplitude: 1.0 }
}

/// Everything a run needs, as read from the TOML file and flag overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub solver: SolverConfig,
    #[serde(default = "default_initial")]
    pub initial: InitialCondition,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let grid = GridSpec::new(8, DealiasRule::TwoThirds).expect("N = 8 is a valid grid");
        Self {
            output: None,
            solver: SolverConfig::new(grid, 0.1, NoiseConfig::deterministic()),
            initial: default_initial(),
            tolerance: ToleranceConfig::default(),
            ensemble: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        toml::from_str(text).map_err(|e| UsageError(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn render(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        let usage = |e: burgers3d::Error| UsageError(e.to_string());
        self.solver.validate().map_err(usage)?;
        self.tolerance.validate().map_err(usage)?;
        self.initial.build(&self.solver.grid).map_err(usage)?;
        if let Some(e) = self.ensemble_config() {
            e.validate().map_err(usage)?;
        }
        Ok(())
    }

    pub fn ensemble_config(&self) -> Option<EnsembleConfig> {
        self.ensemble.as_ref().map(|e| EnsembleConfig {
            n_paths: e.n_paths,
            base_seed: e.base_seed,
            solver: self.solver.clone(),
            initial: self.initial.clone(),
            horizons: e.horizons.clone(),
            p: e.p,
            q: e.q,
            big_q: e.big_q,
        })
    }
}
