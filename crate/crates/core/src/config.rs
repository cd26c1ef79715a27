//! Repository-wide TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constraints::ConstraintsConfig;
use crate::env::EnvConfig;
use crate::eval::EvalConfig;
use crate::physics::WorldConfig;
use crate::rewards::RewardConfig;
use crate::rl::{NetworkConfig, PpoConfig, TrainSetup};
use crate::task::TaskConfig;

/// Every tunable of a train or eval run. Missing sections and keys take
/// their defaults; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub world: WorldConfig,
    pub env: EnvConfig,
    pub reward: RewardConfig,
    pub constraints: ConstraintsConfig,
    pub network: NetworkConfig,
    pub ppo: PpoConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output_dir: PathBuf::from("runs/default"),
            world: WorldConfig::default(),
            env: EnvConfig::default(),
            reward: RewardConfig::default(),
            constraints: ConstraintsConfig::default(),
            network: NetworkConfig::default(),
            ppo: PpoConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl RunConfig {
    /// Parses and validates TOML text.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate().map_err(ConfigError::Invalid)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<(), String> {
        self.train_setup().validate()?;
        self.eval.validate()
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory and
    /// the checkpoint path.
    pub fn config_hash(&self) -> [u8; 32] {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.eval.checkpoint = None;
        let json = serde_json::to_string(&c).expect("configuration serialises");
        Sha256::digest(json.as_bytes()).into()
    }

    pub fn task(&self) -> TaskConfig {
        TaskConfig {
            world: self.world.clone(),
            env: self.env.clone(),
            reward: self.reward.clone(),
            constraints: self.constraints.clone(),
        }
    }

    /// The part of the configuration that determines training.
    pub fn train_setup(&self) -> TrainSetup {
        TrainSetup {
            seed: self.seed,
            task: self.task(),
            network: self.network.clone(),
            ppo: self.ppo.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.seed = 99;
        c.eval.checkpoint = Some(PathBuf::from("a/b.ckpt"));
        c.env.object_override.mass = Some(2.5);
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn hash_ignores_paths() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        b.eval.checkpoint = Some(PathBuf::from("x.ckpt"));
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed += 1;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml("[ppo]\nlearning_rat = 0.1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(err.to_string().contains("learning_rat"), "{err}");
    }

    #[test]
    fn invalid_value_rejected() {
        let err = RunConfig::from_toml("[ppo]\nnum_envs = 0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)), "{err}");
    }
}
