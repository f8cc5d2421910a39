//! Scenario files: TOML with `[fixture]`, `[mode]`, `[caps]`, `[output]`
//! tables and an `[[operations]]` array. See `docs/config.md`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use warpcone::descriptor::{ChainSpec, WarpSystemSpec};
use warpcone::rational::{self, Rational};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub fixture: FixtureConfig,
    #[serde(default)]
    pub mode: ModeConfig,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub operations: Vec<Operation>,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.caps.max_points == 0 || self.caps.max_radius == 0 {
            bail!("caps must be positive");
        }
        if !(self.mode.tol > 0.0 && self.mode.tol.is_finite()) {
            bail!("tolerance must be positive, got {}", self.mode.tol);
        }
        let f = &self.fixture;
        let given = [f.name.is_some(), f.system.is_some(), f.chain.is_some()].iter().filter(|&&b| b).count();
        if given > 1 {
            bail!("[fixture] takes exactly one of `name`, `system` or `chain`");
        }
        Ok(())
    }
}

/// Built-in fixture by name, or a custom warp system or quotient chain.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureConfig {
    pub name: Option<String>,
    /// Truncation level for FIX-B.
    pub level: Option<usize>,
    /// Window for FIX-D.
    pub window: Option<i32>,
    pub system: Option<WarpSystemSpec>,
    pub chain: Option<ChainSpec>,
    #[serde(default)]
    pub allow_convention_violation: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    #[default]
    Exact,
    Float,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    #[serde(default)]
    pub arithmetic: Arithmetic,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for ModeConfig {
    fn default() -> Self {
        Self { arithmetic: Arithmetic::Exact, tol: default_tol() }
    }
}

fn default_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    #[serde(default = "default_max_radius")]
    pub max_radius: u32,
}

impl Default for Caps {
    fn default() -> Self {
        Self { max_points: default_max_points(), max_radius: default_max_radius() }
    }
}

fn default_max_points() -> usize {
    20_000
}

fn default_max_radius() -> u32 {
    8
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    #[default]
    Both,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

/// One step of a scenario. Omitted parameters take the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Operation {
    Warp {
        #[serde(default, with = "rational::serde_opt", skip_serializing_if = "Option::is_none")]
        scale: Option<Rational>,
        #[serde(default)]
        one_step: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        divergence: Option<u32>,
    },
    Slice {
        #[serde(default, with = "rational::serde_vec")]
        scales: Vec<Rational>,
    },
    Delta {
        #[serde(skip_serializing_if = "Option::is_none")]
        n_max: Option<usize>,
    },
    #[serde(rename = "box")]
    BoxSpace {},
    Spectral {
        #[serde(skip_serializing_if = "Option::is_none")]
        edges: Option<PathBuf>,
    },
    EmbedBox {
        #[serde(default, with = "rational::serde_opt", skip_serializing_if = "Option::is_none")]
        scale: Option<Rational>,
    },
    EmbedCone {
        #[serde(default = "default_cone_levels")]
        levels: u32,
    },
    Hr {
        #[serde(default, with = "rational::serde_opt", skip_serializing_if = "Option::is_none")]
        scale: Option<Rational>,
        #[serde(default, with = "rational::serde_opt", skip_serializing_if = "Option::is_none")]
        radius: Option<Rational>,
        #[serde(default, with = "rational::serde_opt", skip_serializing_if = "Option::is_none")]
        eps: Option<Rational>,
        #[serde(default, with = "rational::serde_opt", skip_serializing_if = "Option::is_none")]
        cone_radius: Option<Rational>,
        #[serde(skip_serializing_if = "Option::is_none")]
        r_max: Option<u64>,
    },
    Stabilizer {
        #[serde(default = "default_coprime")]
        coprime: Vec<u64>,
        #[serde(default = "default_power")]
        power: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        radius: Option<u32>,
    },
    Orbit {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        denominator: Option<u64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        coprime: Vec<u64>,
        #[serde(default = "default_orbit_power")]
        power: u32,
    },
}

fn default_cone_levels() -> u32 {
    4
}

fn default_coprime() -> Vec<u64> {
    vec![2, 3]
}

fn default_power() -> u32 {
    2
}

fn default_orbit_power() -> u32 {
    1
}

fn default_dim() -> usize {
    2
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Warp { .. } => "warp",
            Operation::Slice { .. } => "slice",
            Operation::Delta { .. } => "delta",
            Operation::BoxSpace {} => "box",
            Operation::Spectral { .. } => "spectral",
            Operation::EmbedBox { .. } => "embed-box",
            Operation::EmbedCone { .. } => "embed-cone",
            Operation::Hr { .. } => "hr",
            Operation::Stabilizer { .. } => "stabilizer",
            Operation::Orbit { .. } => "orbit",
        }
    }
}
