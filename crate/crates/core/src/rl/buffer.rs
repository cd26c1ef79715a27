//! Fixed-horizon rollout storage, time-major (`[t][env]`).

use super::gae::{gae, normalize, GaeStep};
use super::ppo::UpdateBatch;
use crate::env::{Termination, ACTION_DIM, ACTOR_DIM, CRITIC_DIM};

#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    pub horizon: usize,
    pub num_envs: usize,
    pub actor_obs: Vec<f64>,
    pub critic_obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub log_prob: Vec<f64>,
    pub reward: Vec<f64>,
    pub value: Vec<f64>,
    /// Successor value used for the TD residual.
    pub next_value: Vec<f64>,
    pub termination: Vec<Termination>,
    pub delta: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    filled: usize,
}

impl RolloutBuffer {
    pub fn new(horizon: usize, num_envs: usize) -> Self {
        let n = horizon * num_envs;
        Self {
            horizon,
            num_envs,
            actor_obs: vec![0.0; n * ACTOR_DIM],
            critic_obs: vec![0.0; n * CRITIC_DIM],
            actions: vec![0.0; n * ACTION_DIM],
            log_prob: vec![0.0; n],
            reward: vec![0.0; n],
            value: vec![0.0; n],
            next_value: vec![0.0; n],
            termination: vec![Termination::Running; n],
            delta: vec![0.0; n],
            advantages: vec![0.0; n],
            returns: vec![0.0; n],
            filled: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.horizon * self.num_envs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, t: usize, env: usize) -> usize {
        t * self.num_envs + env
    }

    /// Stores the policy-side record of one sample.
    pub fn put_policy(
        &mut self,
        k: usize,
        actor_obs: &[f64],
        critic_obs: &[f64],
        action: &[f64],
        log_prob: f64,
        value: f64,
    ) {
        self.actor_obs[k * ACTOR_DIM..(k + 1) * ACTOR_DIM].copy_from_slice(actor_obs);
        self.critic_obs[k * CRITIC_DIM..(k + 1) * CRITIC_DIM].copy_from_slice(critic_obs);
        self.actions[k * ACTION_DIM..(k + 1) * ACTION_DIM].copy_from_slice(action);
        self.log_prob[k] = log_prob;
        self.value[k] = value;
    }

    pub fn put_outcome(
        &mut self,
        k: usize,
        reward: f64,
        delta: f64,
        termination: Termination,
        next_value: f64,
    ) {
        self.reward[k] = reward;
        self.delta[k] = delta;
        self.termination[k] = termination;
        self.next_value[k] = next_value;
        self.filled = self.filled.max(k + 1);
    }

    /// Runs GAE per environment column and normalises the advantages.
    pub fn compute_advantages(&mut self, gamma: f64, lambda: f64) {
        assert_eq!(self.filled, self.len(), "rollout incomplete");
        let (t_len, n) = (self.horizon, self.num_envs);
        let mut steps = Vec::with_capacity(t_len);
        let mut adv = vec![0.0; t_len];
        let mut ret = vec![0.0; t_len];
        for e in 0..n {
            steps.clear();
            for t in 0..t_len {
                let k = t * n + e;
                steps.push(GaeStep {
                    reward: self.reward[k],
                    value: self.value[k],
                    next_value: self.next_value[k],
                    done: self.termination[k].is_done(),
                    delta: self.delta[k],
                });
            }
            gae(&steps, gamma, lambda, &mut adv, &mut ret);
            for t in 0..t_len {
                self.advantages[t * n + e] = adv[t];
                self.returns[t * n + e] = ret[t];
            }
        }
        normalize(&mut self.advantages);
    }

    pub fn batch(&self) -> UpdateBatch<'_> {
        UpdateBatch {
            actor_obs: &self.actor_obs,
            critic_obs: &self.critic_obs,
            actions: &self.actions,
            old_log_prob: &self.log_prob,
            advantages: &self.advantages,
            returns: &self.returns,
        }
    }

    pub fn clear(&mut self) {
        self.filled = 0;
    }
}
