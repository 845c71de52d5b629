//! Run configuration loaded from a TOML file.
//!
//! Every field has a default, so an empty file is a valid configuration.
//! The top-level seed overrides the seeds of both optimizers.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dqn::DqnConfig;
use crate::dynamics::ChainConfig;
use crate::environment::{default_horizon, EpisodeConfig, RewardConfig};
use crate::error::{Error, Result};
use crate::ga::GaConfig;

/// Episode settings that do not depend on the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeSettings {
    /// Control intervals per episode; defaults to `⌈2.5·N⌉` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub success_threshold: f64,
    pub early_stop: bool,
    pub reward: RewardConfig,
}

impl Default for EpisodeSettings {
    fn default() -> Self {
        let base = EpisodeConfig::new(ChainConfig::default());
        Self {
            horizon: None,
            success_threshold: base.success_threshold,
            early_stop: base.early_stop,
            reward: base.reward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub chain: ChainConfig,
    pub episode: EpisodeSettings,
    pub ga: GaConfig,
    pub dqn: DqnConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            chain: ChainConfig::default(),
            episode: EpisodeSettings::default(),
            ga: GaConfig::default(),
            dqn: DqnConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.episode_config().validate()?;
        self.ga.validate()?;
        self.dqn.validate()
    }

    pub fn with_n_sites(mut self, n_sites: usize) -> Self {
        self.chain.n_sites = n_sites;
        self
    }

    pub fn episode_config(&self) -> EpisodeConfig {
        EpisodeConfig {
            chain: self.chain,
            horizon: self
                .episode
                .horizon
                .unwrap_or_else(|| default_horizon(self.chain.n_sites)),
            success_threshold: self.episode.success_threshold,
            early_stop: self.episode.early_stop,
            reward: self.episode.reward,
        }
    }

    /// GA settings carrying `seed + offset`.
    pub fn ga_config(&self, offset: u64) -> GaConfig {
        GaConfig {
            seed: self.seed.wrapping_add(offset),
            ..self.ga.clone()
        }
    }

    /// DQN settings carrying `seed + offset`.
    pub fn dqn_config(&self, offset: u64) -> DqnConfig {
        DqnConfig {
            seed: self.seed.wrapping_add(offset),
            ..self.dqn.clone()
        }
    }
}
