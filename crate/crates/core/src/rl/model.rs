//! Asymmetric actor-critic parameters.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::mlp::{predict, Activation, MlpSpec};
use super::policy::clamp_log_std;
use crate::env::{ACTION_DIM, ACTOR_DIM, CRITIC_DIM};

/// Network shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub activation: Activation,
    /// Initial standard deviation of every action dimension.
    pub init_std: f64,
    /// Scale of the initial actor output layer.
    pub actor_output_gain: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            actor_hidden: vec![256, 128, 64],
            critic_hidden: vec![256, 128, 64],
            activation: Activation::Elu,
            init_std: 1.0,
            actor_output_gain: 0.01,
        }
    }
}

impl NetworkConfig {
    pub fn actor_spec(&self) -> MlpSpec {
        MlpSpec {
            activation: self.activation,
            ..MlpSpec::new(ACTOR_DIM, &self.actor_hidden, ACTION_DIM)
        }
    }

    pub fn critic_spec(&self) -> MlpSpec {
        MlpSpec {
            activation: self.activation,
            ..MlpSpec::new(CRITIC_DIM, &self.critic_hidden, 1)
        }
    }

    /// Hash identifying the parameter layout; checkpoints carry it.
    pub fn spec_hash(&self) -> [u8; 32] {
        let text = format!(
            "actor={};log_std={};critic={}",
            self.actor_spec().describe(),
            ACTION_DIM,
            self.critic_spec().describe()
        );
        Sha256::digest(text.as_bytes()).into()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self
            .actor_hidden
            .iter()
            .chain(&self.critic_hidden)
            .any(|w| *w == 0)
        {
            return Err("network: hidden widths must be positive".into());
        }
        if !(self.init_std > 0.0 && self.init_std.is_finite()) {
            return Err("network.init_std must be positive".into());
        }
        Ok(())
    }
}

/// Actor MLP, state-independent log standard deviations and critic MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub actor_spec: MlpSpec,
    pub critic_spec: MlpSpec,
    pub actor: Vec<f64>,
    pub log_std: Vec<f64>,
    pub critic: Vec<f64>,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> Self {
        let actor_spec = cfg.actor_spec();
        let critic_spec = cfg.critic_spec();
        let actor = actor_spec.init_params(rng, cfg.actor_output_gain);
        let critic = critic_spec.init_params(rng, 1.0);
        Self {
            actor_spec,
            critic_spec,
            actor,
            log_std: vec![cfg.init_std.ln(); ACTION_DIM],
            critic,
        }
    }

    /// Action means for a batch of actor observations.
    pub fn action_mean(&self, actor_obs: &[f64], batch: usize) -> Vec<f64> {
        predict(&self.actor_spec, &self.actor, actor_obs, batch)
    }

    /// Full policy head output: per row the 11 means followed by the 11
    /// (clamped) log standard deviations.
    pub fn policy_output(&self, actor_obs: &[f64], batch: usize) -> Vec<f64> {
        let mean = self.action_mean(actor_obs, batch);
        let mut out = Vec::with_capacity(batch * 2 * ACTION_DIM);
        for row in mean.chunks_exact(ACTION_DIM) {
            out.extend_from_slice(row);
            out.extend(self.log_std.iter().map(|l| clamp_log_std(*l)));
        }
        out
    }

    pub fn value(&self, critic_obs: &[f64], batch: usize) -> Vec<f64> {
        predict(&self.critic_spec, &self.critic, critic_obs, batch)
    }

    pub fn mean_std(&self) -> f64 {
        self.log_std
            .iter()
            .map(|l| clamp_log_std(*l).exp())
            .sum::<f64>()
            / self.log_std.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.actor
            .iter()
            .chain(&self.log_std)
            .chain(&self.critic)
            .all(|v| v.is_finite())
    }
}
