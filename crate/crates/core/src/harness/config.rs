use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::EnvKind;
use crate::error::{Error, Result};
use crate::interconnect::HwConfig;
use crate::neat::NeatParams;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReproMode {
    /// Whole-genome reproduction.
    Reference,
    /// Streaming reproduction on the modeled PE array.
    #[default]
    Eve,
    /// Both paths every generation; any difference aborts the run.
    Both,
}

impl std::str::FromStr for ReproMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(ReproMode::Reference),
            "eve" => Ok(ReproMode::Eve),
            "both" => Ok(ReproMode::Both),
            other => Err(Error::Config(format!(
                "unknown reproduction mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub name: EnvKind,
    /// Episodes averaged into one fitness value.
    pub episodes: u32,
    /// Overrides the task's own target when set.
    pub target_fitness: Option<f64>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            name: EnvKind::Xor,
            episodes: 1,
            target_fitness: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub population_size: usize,
    pub max_generations: u32,
    pub seed: u64,
    pub reproduction: ReproMode,
    pub output_dir: Option<PathBuf>,
    /// Stop at the first generation whose best genome reaches the target.
    pub stop_on_target: bool,
    /// Write one population file per generation into the output directory.
    pub write_populations: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            population_size: 150,
            max_generations: 300,
            seed: 0,
            reproduction: ReproMode::Eve,
            output_dir: None,
            stop_on_target: true,
            write_populations: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub neat: NeatParams,
    pub hw: HwConfig,
    pub env: EnvConfig,
    pub run: RunSection,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn target_fitness(&self) -> f64 {
        self.env
            .target_fitness
            .unwrap_or_else(|| self.env.name.spec().target_fitness)
    }

    pub fn validate(&self) -> Result<()> {
        self.neat.validate()?;
        self.hw.validate()?;
        if self.run.population_size < 2 {
            return Err(Error::Config(format!(
                "population_size = {} is below 2",
                self.run.population_size
            )));
        }
        if self.neat.elitism >= self.run.population_size {
            return Err(Error::Config(
                "elitism must leave room for at least one child".into(),
            ));
        }
        if self.run.population_size > u16::MAX as usize {
            return Err(Error::Config(
                "population_size does not fit the population file".into(),
            ));
        }
        if self.run.max_generations == 0 {
            return Err(Error::Config("max_generations must be at least 1".into()));
        }
        if self.env.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if let Some(t) = self.env.target_fitness {
            if !t.is_finite() {
                return Err(Error::Config(format!("target_fitness = {t} is not finite")));
            }
        }
        Ok(())
    }
}
