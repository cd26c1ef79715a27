//! Asymmetric actor-critic PPO with constraints-as-terminations.

pub mod adam;
pub mod buffer;
pub mod checkpoint;
pub mod gae;
pub mod mlp;
pub mod model;
pub mod policy;
pub mod ppo;
pub mod train;

use thiserror::Error;

pub use buffer::RolloutBuffer;
pub use checkpoint::{Checkpoint, CheckpointError};
pub use mlp::{Activation, MlpSpec};
pub use model::{ActorCritic, NetworkConfig};
pub use ppo::{ppo_update, Optimizers, PpoConfig, UpdateStats};
pub use train::{train, IterationMetrics, MemorySink, TrainSetup, TrainSink, Trainer};

use crate::env::EnvError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss (policy {policy}, value {value}); update aborted")]
    NonFiniteLoss { policy: f64, value: f64 },
    #[error("parameters became non-finite after an update")]
    NonFiniteParameters,
    #[error("environment error: {0}")]
    Env(#[from] EnvError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(
        "checkpoint was produced by a different configuration (hash {found}, expected {expected})"
    )]
    ConfigMismatch { found: String, expected: String },
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}
