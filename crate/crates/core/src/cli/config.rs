use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Alignment, LogisticConfig, DEFAULT_HORIZON, DEFAULT_ITERATIONS};
use crate::ingest::CohortCriteria;
use crate::model::ModelConfig;
use crate::sofa::BedsideTable;
use crate::synth::SynthConfig;
use crate::variables::VariableSpecs;

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "ICU_ACUITY_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variables: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bedside_table: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub alignment: Alignment,
    pub horizon: usize,
    pub bootstrap_iterations: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            alignment: Alignment::FromAdmission,
            horizon: DEFAULT_HORIZON,
            bootstrap_iterations: DEFAULT_ITERATIONS,
        }
    }
}

/// Settings for one invocation. Precedence, lowest first: built-in
/// defaults, the config file, command-line flags. A top-level `seed`
/// replaces the seed of every section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub paths: PathsConfig,
    pub cohort: CohortCriteria,
    pub model: ModelConfig,
    pub synth: SynthConfig,
    pub logistic: LogisticConfig,
    pub evaluation: EvaluationConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Reads `explicit`, else the file named by [`CONFIG_ENV`], else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.apply_seed();
    }

    pub fn apply_seed(&mut self) {
        if let Some(s) = self.seed {
            self.model.seed = s;
            self.synth.seed = s;
            self.logistic.seed = s;
        }
    }

    /// Seed for bootstrap resampling.
    pub fn eval_seed(&self) -> u64 {
        self.seed.unwrap_or(self.model.seed)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.cohort.validate()?;
        self.model.validate()?;
        self.synth.validate()?;
        if self.evaluation.horizon == 0 {
            return Err(Error::Config("evaluation.horizon must be at least 1".into()));
        }
        for p in [&self.paths.variables, &self.paths.bedside_table].into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn variable_specs(&self) -> Result<VariableSpecs> {
        match &self.paths.variables {
            Some(p) => VariableSpecs::load(p),
            None => Ok(VariableSpecs::default()),
        }
    }

    pub fn bedside_table(&self) -> Result<BedsideTable> {
        match &self.paths.bedside_table {
            Some(p) => BedsideTable::load(p),
            None => Ok(BedsideTable::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_and_seed() {
        let mut c = RunConfig::parse(
            "seed = 9\n[model]\nhidden_dim = 8\n[evaluation]\nalignment = \"to_discharge\"\n[cohort]\nmulti_stay_policy = \"first_only\"",
        )
        .unwrap();
        c.apply_seed();
        assert_eq!(c.model.hidden_dim, 8);
        assert_eq!((c.model.seed, c.synth.seed, c.logistic.seed), (9, 9, 9));
        assert_eq!(c.evaluation.alignment, Alignment::ToDischarge);
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("[model]\nhiden_dim = 8").is_err());
        assert!(RunConfig::parse("colour = 1").is_err());
    }
}
