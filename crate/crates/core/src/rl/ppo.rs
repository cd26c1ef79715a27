//! Clipped-surrogate PPO update.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{clip_global_norm, Adam};
use super::mlp::{backward, forward};
use super::model::ActorCritic;
use super::policy::{entropy, entropy_grad, log_prob, log_prob_grad};
use super::TrainError;
use crate::env::{ACTION_DIM, ACTOR_DIM, CRITIC_DIM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub num_envs: usize,
    /// Steps per environment per iteration.
    pub horizon: usize,
    pub iterations: u64,
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub learning_rate: f64,
    /// Decay the learning rate linearly to zero over `iterations`.
    pub lr_decay: bool,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    /// Multiplies rewards before advantage estimation.
    pub reward_scale: f64,
    /// Iterations between checkpoints; 0 writes only the final one.
    pub checkpoint_interval: u64,
    /// Give each environment's first episode a random length so episode
    /// boundaries spread across iterations.
    pub stagger_starts: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            num_envs: 256,
            horizon: 48,
            iterations: 2000,
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            epochs: 5,
            minibatches: 4,
            learning_rate: 3e-4,
            lr_decay: true,
            entropy_coef: 0.005,
            value_coef: 1.0,
            max_grad_norm: 1.0,
            reward_scale: 0.02,
            checkpoint_interval: 250,
            stagger_starts: true,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0 && self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err("ppo: gamma and lambda must lie in (0, 1]".into());
        }
        if self.num_envs == 0 || self.horizon == 0 || self.epochs == 0 || self.minibatches == 0 {
            return Err("ppo: num_envs, horizon, epochs and minibatches must be positive".into());
        }
        if self.minibatches > self.num_envs * self.horizon {
            return Err("ppo: more minibatches than samples".into());
        }
        for (name, v) in [
            ("clip", self.clip),
            ("learning_rate", self.learning_rate),
            ("max_grad_norm", self.max_grad_norm),
            ("reward_scale", self.reward_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("ppo.{name} must be positive"));
            }
        }
        if !(self.entropy_coef >= 0.0 && self.value_coef >= 0.0) {
            return Err("ppo: loss coefficients must be non-negative".into());
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, iteration: u64) -> f64 {
        if self.lr_decay && self.iterations > 0 {
            let f = 1.0 - iteration as f64 / self.iterations as f64;
            self.learning_rate * f.max(0.0)
        } else {
            self.learning_rate
        }
    }
}

/// Optimiser state for every parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizers {
    pub actor: Adam,
    pub log_std: Adam,
    pub critic: Adam,
}

impl Optimizers {
    pub fn new(model: &ActorCritic) -> Self {
        Self {
            actor: Adam::new(model.actor.len()),
            log_std: Adam::new(model.log_std.len()),
            critic: Adam::new(model.critic.len()),
        }
    }
}

/// Flattened rollout samples, row-major.
#[derive(Debug, Clone, Copy)]
pub struct UpdateBatch<'a> {
    pub actor_obs: &'a [f64],
    pub critic_obs: &'a [f64],
    pub actions: &'a [f64],
    pub old_log_prob: &'a [f64],
    /// Already normalised.
    pub advantages: &'a [f64],
    pub returns: &'a [f64],
}

impl UpdateBatch<'_> {
    pub fn len(&self) -> usize {
        self.advantages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.advantages.is_empty()
    }
}

/// Loss components of one minibatch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MinibatchLoss {
    /// `-mean(min(ρA, clip(ρ)A))`.
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// Mean `ρA`, the unclipped surrogate.
    pub surrogate: f64,
}

impl MinibatchLoss {
    pub fn total(&self, cfg: &PpoConfig) -> f64 {
        self.policy + cfg.value_coef * self.value - cfg.entropy_coef * self.entropy
    }
}

/// Gradients of the total loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub actor: Vec<f64>,
    pub log_std: Vec<f64>,
    pub critic: Vec<f64>,
}

fn gather(src: &[f64], width: usize, idx: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(idx.len() * width);
    for &i in idx {
        out.extend_from_slice(&src[i * width..(i + 1) * width]);
    }
    out
}

/// Loss and gradients on the samples `idx`.
pub fn minibatch_gradients(
    model: &ActorCritic,
    batch: &UpdateBatch,
    idx: &[usize],
    cfg: &PpoConfig,
) -> (MinibatchLoss, Gradients) {
    let b = idx.len();
    let nb = b as f64;
    let a_obs = gather(batch.actor_obs, ACTOR_DIM, idx);
    let c_obs = gather(batch.critic_obs, CRITIC_DIM, idx);
    let actions = gather(batch.actions, ACTION_DIM, idx);

    let a_cache = forward(&model.actor_spec, &model.actor, &a_obs, b);
    let means = a_cache.output();
    let c_cache = forward(&model.critic_spec, &model.critic, &c_obs, b);
    let values = c_cache.output();

    let mut loss = MinibatchLoss {
        entropy: entropy(&model.log_std),
        ..Default::default()
    };
    let mut d_mean = vec![0.0; b * ACTION_DIM];
    let mut d_log_std = vec![0.0; ACTION_DIM];
    let mut d_value = vec![0.0; b];
    let (mut gm, mut gl) = ([0.0; ACTION_DIM], [0.0; ACTION_DIM]);
    for (row, &i) in idx.iter().enumerate() {
        let mean = &means[row * ACTION_DIM..(row + 1) * ACTION_DIM];
        let act = &actions[row * ACTION_DIM..(row + 1) * ACTION_DIM];
        let lp = log_prob(mean, &model.log_std, act);
        let log_ratio = lp - batch.old_log_prob[i];
        let ratio = log_ratio.exp();
        let adv = batch.advantages[i];
        let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip);
        let unclipped_obj = ratio * adv;
        let clipped_obj = clipped * adv;
        loss.policy -= unclipped_obj.min(clipped_obj) / nb;
        loss.surrogate += unclipped_obj / nb;
        loss.approx_kl += ((ratio - 1.0) - log_ratio) / nb;
        if (ratio - 1.0).abs() > cfg.clip {
            loss.clip_fraction += 1.0 / nb;
        }
        // The minimum follows the unclipped branch whenever it is not larger.
        if unclipped_obj <= clipped_obj {
            let d_lp = -adv * ratio / nb;
            log_prob_grad(mean, &model.log_std, act, &mut gm, &mut gl);
            for k in 0..ACTION_DIM {
                d_mean[row * ACTION_DIM + k] = d_lp * gm[k];
                d_log_std[k] += d_lp * gl[k];
            }
        }
        let err = values[row] - batch.returns[i];
        loss.value += err * err / nb;
        d_value[row] = cfg.value_coef * 2.0 * err / nb;
    }
    let mut ge = [0.0; ACTION_DIM];
    entropy_grad(&model.log_std, &mut ge);
    for k in 0..ACTION_DIM {
        d_log_std[k] -= cfg.entropy_coef * ge[k];
    }

    let mut g_actor = vec![0.0; model.actor.len()];
    backward(
        &model.actor_spec,
        &model.actor,
        &a_cache,
        &d_mean,
        &mut g_actor,
        false,
    );
    let mut g_critic = vec![0.0; model.critic.len()];
    backward(
        &model.critic_spec,
        &model.critic,
        &c_cache,
        &d_value,
        &mut g_critic,
        false,
    );
    (
        loss,
        Gradients {
            actor: g_actor,
            log_std: d_log_std,
            critic: g_critic,
        },
    )
}

/// Mean statistics of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

/// Runs `epochs × minibatches` gradient steps over a shuffled batch.
pub fn ppo_update<R: Rng + ?Sized>(
    model: &mut ActorCritic,
    opt: &mut Optimizers,
    batch: &UpdateBatch,
    cfg: &PpoConfig,
    lr: f64,
    rng: &mut R,
) -> Result<UpdateStats, TrainError> {
    let n = batch.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = UpdateStats::default();
    let mut count = 0.0;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for m in 0..cfg.minibatches {
            let lo = m * n / cfg.minibatches;
            let hi = (m + 1) * n / cfg.minibatches;
            let (loss, mut g) = minibatch_gradients(model, batch, &order[lo..hi], cfg);
            if !loss.total(cfg).is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    policy: loss.policy,
                    value: loss.value,
                });
            }
            let norm = clip_global_norm(
                &mut [&mut g.actor, &mut g.log_std, &mut g.critic],
                cfg.max_grad_norm,
            );
            opt.actor.update(&mut model.actor, &g.actor, lr);
            opt.log_std.update(&mut model.log_std, &g.log_std, lr);
            opt.critic.update(&mut model.critic, &g.critic, lr);
            stats.policy_loss += loss.policy;
            stats.value_loss += loss.value;
            stats.entropy += loss.entropy;
            stats.approx_kl += loss.approx_kl;
            stats.clip_fraction += loss.clip_fraction;
            stats.grad_norm += norm;
            count += 1.0;
        }
    }
    if !model.is_finite() {
        return Err(TrainError::NonFiniteParameters);
    }
    stats.policy_loss /= count;
    stats.value_loss /= count;
    stats.entropy /= count;
    stats.approx_kl /= count;
    stats.clip_fraction /= count;
    stats.grad_norm /= count;
    Ok(stats)
}
