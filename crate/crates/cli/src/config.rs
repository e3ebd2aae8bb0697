use std::path::{Path, PathBuf};

use addbo::acquisition::{BetaSchedule, BoxDomain};
use addbo::batch::BatchConfig;
use addbo::decomposition::GibbsConfig;
use addbo::experiment::{RunConfig, DEFAULT_FEATURES};
use addbo::{Error, KernelSpec, Result};
use serde::{Deserialize, Serialize};

/// Structure-recovery grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecoverConfig {
    pub dims: Vec<usize>,
    pub sizes: Vec<usize>,
    pub trials: usize,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        Self { dims: vec![5], sizes: vec![250], trials: 10 }
    }
}

/// Synthetic objective settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveConfig {
    pub dim: usize,
    pub features: usize,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self { dim: 10, features: DEFAULT_FEATURES }
    }
}

/// Everything a command can be configured with; flags override file values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    pub gibbs: GibbsConfig,
    pub run: RunConfig,
    pub batch: BatchConfig,
    /// Defaults to the schedule for the objective's dimension.
    pub beta: Option<BetaSchedule>,
    /// Defaults to the unit box.
    pub domain: Option<BoxDomain>,
    pub objective: ObjectiveConfig,
    pub recover: RecoverConfig,
    /// Independent repetitions with seeds `seed, seed + 1, …`.
    pub runs: usize,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn beta(&self) -> BetaSchedule {
        self.beta.unwrap_or_else(|| BetaSchedule::for_dimension(self.objective.dim))
    }

    pub fn domain(&self) -> BoxDomain {
        self.domain.clone().unwrap_or_else(|| BoxDomain::unit(self.objective.dim))
    }

    pub fn runs(&self) -> usize {
        self.runs.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.gibbs.validate()?;
        self.run.validate()?;
        self.beta().validate()?;
        let domain = self.domain();
        domain.validate()?;
        if self.objective.dim < 2 {
            return Err(Error::Config("objective.dim must be at least 2".into()));
        }
        if domain.dim() != self.objective.dim {
            return Err(Error::Config(format!(
                "domain has {} dimensions but objective.dim is {}",
                domain.dim(),
                self.objective.dim
            )));
        }
        if self.objective.features == 0 {
            return Err(Error::Config("objective.features must be at least 1".into()));
        }
        if self.recover.trials == 0 {
            return Err(Error::Config("recover.trials must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("[run]\nrounds = 3\nbogus = 1\n").is_err());
        assert!(toml::from_str::<ExperimentConfig>("colour = 1\n").is_err());
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c: ExperimentConfig = toml::from_str("[run]\nrounds = 3\nvariant = \"gibbs-l\"\n[kernel]\nbandwidth = 0.2\nscale = 5.0\nnoise_sigma = 0.1\n").unwrap();
        assert_eq!(c.run.rounds, 3);
        assert_eq!(c.run.n_cyc, RunConfig::default().n_cyc);
        assert_eq!(c.kernel.bandwidth, 0.2);
        c.validate().unwrap();
    }

    #[test]
    fn domain_must_match_dimension() {
        let c = ExperimentConfig { domain: Some(BoxDomain::unit(3)), ..Default::default() };
        assert!(c.validate().is_err());
    }
}
