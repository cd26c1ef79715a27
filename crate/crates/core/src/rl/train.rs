//! Training loop: collect, estimate advantages, update.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::buffer::RolloutBuffer;
use super::checkpoint::Checkpoint;
use super::model::{ActorCritic, NetworkConfig};
use super::policy::sample;
use super::ppo::{ppo_update, Optimizers, PpoConfig, UpdateStats};
use super::TrainError;
use crate::constraints::NUM_IMPLEMENTED;
use crate::env::{ActionVec, ActorObs, CriticObs, Termination, ACTION_DIM, ACTOR_DIM, CRITIC_DIM};
use crate::rng::{derive_seed, purpose, stream};
use crate::task::{PushTask, TaskConfig};

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSetup {
    pub seed: u64,
    pub task: TaskConfig,
    pub network: NetworkConfig,
    pub ppo: PpoConfig,
}

impl TrainSetup {
    /// SHA-256 of the canonical JSON form.
    pub fn config_hash(&self) -> [u8; 32] {
        let json = serde_json::to_string(self).expect("configuration serialises");
        Sha256::digest(json.as_bytes()).into()
    }

    /// Hash stored in checkpoints: the configuration hash with the iteration
    /// budget and checkpoint interval zeroed, so a run can be extended.
    pub fn resume_hash(&self) -> [u8; 32] {
        let mut s = self.clone();
        s.ppo.iterations = 0;
        s.ppo.checkpoint_interval = 0;
        s.config_hash()
    }

    pub fn validate(&self) -> Result<(), String> {
        self.task.validate()?;
        self.network.validate()?;
        self.ppo.validate()
    }
}

/// One row of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationMetrics {
    /// 1-based count of completed iterations.
    pub iteration: u64,
    pub mean_reward: f64,
    pub mean_terms: [f64; 4],
    pub episodes: u64,
    pub success_rate: f64,
    pub topple_rate: f64,
    pub mean_delta: f64,
    pub max_delta: f64,
    pub delta_nonzero: f64,
    /// Fraction of steps each implemented constraint was violated.
    pub violation: [f64; NUM_IMPLEMENTED],
    pub update: UpdateStats,
    pub action_std: f64,
    pub learning_rate: f64,
}

impl IterationMetrics {
    pub fn csv_header() -> String {
        let mut cols: Vec<String> = [
            "iteration",
            "mean_reward",
            "r1",
            "r2",
            "r3",
            "r4",
            "episodes",
            "success_rate",
            "topple_rate",
            "mean_delta",
            "max_delta",
            "delta_nonzero",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for k in crate::constraints::ConstraintKind::IMPLEMENTED {
            cols.push(format!("viol_{}", k.name()));
        }
        for c in [
            "policy_loss",
            "value_loss",
            "entropy",
            "approx_kl",
            "clip_fraction",
            "grad_norm",
            "action_std",
            "learning_rate",
        ] {
            cols.push(c.to_string());
        }
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let u = &self.update;
        let mut v: Vec<String> = vec![self.iteration.to_string(), self.mean_reward.to_string()];
        v.extend(self.mean_terms.iter().map(|x| x.to_string()));
        v.push(self.episodes.to_string());
        for x in [
            self.success_rate,
            self.topple_rate,
            self.mean_delta,
            self.max_delta,
            self.delta_nonzero,
        ] {
            v.push(x.to_string());
        }
        v.extend(self.violation.iter().map(|x| x.to_string()));
        for x in [
            u.policy_loss,
            u.value_loss,
            u.entropy,
            u.approx_kl,
            u.clip_fraction,
            u.grad_norm,
            self.action_std,
            self.learning_rate,
        ] {
            v.push(x.to_string());
        }
        v.join(",")
    }
}

struct Slot {
    task: PushTask,
    actor: ActorObs,
    critic: CriticObs,
    base_seed: u64,
    episode: u64,
}

impl Slot {
    fn start(base_seed: u64, episode: u64, cfg: &TaskConfig) -> Self {
        let (task, actor, critic) =
            PushTask::reset(stream(base_seed, purpose::TRAIN_ENV, episode), cfg);
        Self {
            task,
            actor,
            critic,
            base_seed,
            episode,
        }
    }

    /// First episode, truncated to a random length in `1..=limit`.
    fn start_staggered(base_seed: u64, cfg: &TaskConfig) -> Self {
        let mut slot = Self::start(base_seed, 0, cfg);
        let limit = slot.task.spec.episode_step_limit;
        slot.task.spec.episode_step_limit =
            stream(base_seed, purpose::START_LENGTH, 0).random_range(1..=limit);
        slot
    }

    fn restart(&mut self, cfg: &TaskConfig) {
        *self = Self::start(self.base_seed, self.episode + 1, cfg);
    }
}

/// Stateful trainer; one [`Trainer::iterate`] call is one learning iteration.
pub struct Trainer {
    pub setup: TrainSetup,
    pub model: ActorCritic,
    pub optimizers: Optimizers,
    /// Completed iterations.
    pub iteration: u64,
    config_hash: [u8; 32],
    slots: Vec<Slot>,
    buffer: RolloutBuffer,
}

impl Trainer {
    pub fn new(setup: TrainSetup) -> Self {
        let model = ActorCritic::new(
            &setup.network,
            &mut stream(setup.seed, purpose::POLICY_INIT, 0),
        );
        let optimizers = Optimizers::new(&model);
        let slot_seed = setup.seed;
        Self::assemble(setup, model, optimizers, 0, |e| {
            derive_seed(slot_seed, purpose::TRAIN_ENV, e as u64)
        })
    }

    /// Continues from a checkpoint. Environments restart from fresh episodes
    /// seeded by the checkpoint iteration.
    pub fn resume(setup: TrainSetup, ck: Checkpoint) -> Result<Self, TrainError> {
        let expected = setup.resume_hash();
        if ck.config_hash != expected {
            return Err(TrainError::ConfigMismatch {
                found: hex::encode(ck.config_hash),
                expected: hex::encode(expected),
            });
        }
        let base = derive_seed(setup.seed, purpose::RESUME, ck.iteration);
        Ok(Self::assemble(
            setup,
            ck.model,
            ck.optimizers,
            ck.iteration,
            |e| derive_seed(base, purpose::TRAIN_ENV, e as u64),
        ))
    }

    fn assemble(
        setup: TrainSetup,
        model: ActorCritic,
        optimizers: Optimizers,
        iteration: u64,
        slot_seed: impl Fn(usize) -> u64,
    ) -> Self {
        let n = setup.ppo.num_envs;
        let slots = (0..n)
            .map(|e| {
                if setup.ppo.stagger_starts {
                    Slot::start_staggered(slot_seed(e), &setup.task)
                } else {
                    Slot::start(slot_seed(e), 0, &setup.task)
                }
            })
            .collect();
        let buffer = RolloutBuffer::new(setup.ppo.horizon, n);
        let config_hash = setup.resume_hash();
        Self {
            setup,
            model,
            optimizers,
            iteration,
            config_hash,
            slots,
            buffer,
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            spec_hash: self.setup.network.spec_hash(),
            config_hash: self.config_hash,
            iteration: self.iteration,
            seed: self.setup.seed,
            model: self.model.clone(),
            optimizers: self.optimizers.clone(),
        }
    }

    pub fn is_finished(&self) -> bool {
        self.iteration >= self.setup.ppo.iterations
    }

    /// Collects one rollout and applies one PPO update.
    pub fn iterate(&mut self) -> Result<IterationMetrics, TrainError> {
        let it = self.iteration;
        let cfg = &self.setup.ppo;
        let task_cfg = &self.setup.task;
        let n = cfg.num_envs;
        let mut action_rng = stream(self.setup.seed, purpose::ACTION_SAMPLING, it);
        let mut m = IterationMetrics {
            iteration: it + 1,
            learning_rate: cfg.learning_rate_at(it),
            ..Default::default()
        };
        let (mut successes, mut topples) = (0u64, 0u64);
        let mut violated = [0u64; NUM_IMPLEMENTED];
        let mut delta_nonzero = 0u64;

        self.buffer.clear();
        let mut a_obs = vec![0.0; n * ACTOR_DIM];
        let mut c_obs = vec![0.0; n * CRITIC_DIM];
        let mut action = [0.0; ACTION_DIM];
        let mut pending: Vec<usize> = Vec::new();
        let mut terminal_obs: Vec<f64> = Vec::new();
        for t in 0..cfg.horizon {
            for (e, s) in self.slots.iter().enumerate() {
                a_obs[e * ACTOR_DIM..(e + 1) * ACTOR_DIM].copy_from_slice(&s.actor.0);
                c_obs[e * CRITIC_DIM..(e + 1) * CRITIC_DIM].copy_from_slice(&s.critic.0);
            }
            let means = self.model.action_mean(&a_obs, n);
            let values = self.model.value(&c_obs, n);
            if t > 0 {
                for e in 0..n {
                    let k = self.buffer.index(t - 1, e);
                    if !self.buffer.termination[k].is_done() {
                        self.buffer.next_value[k] = values[e];
                    }
                }
            }
            pending.clear();
            terminal_obs.clear();
            for e in 0..n {
                let k = self.buffer.index(t, e);
                let mean = &means[e * ACTION_DIM..(e + 1) * ACTION_DIM];
                let lp = sample(mean, &self.model.log_std, &mut action_rng, &mut action);
                self.buffer.put_policy(
                    k,
                    &a_obs[e * ACTOR_DIM..(e + 1) * ACTOR_DIM],
                    &c_obs[e * CRITIC_DIM..(e + 1) * CRITIC_DIM],
                    &action,
                    lp,
                    values[e],
                );
                let slot = &mut self.slots[e];
                let out = slot.task.step(&ActionVec(action), task_cfg, it)?;
                m.mean_reward += out.reward;
                for (acc, r) in m.mean_terms.iter_mut().zip(out.terms.as_array()) {
                    *acc += r;
                }
                m.mean_delta += out.report.delta;
                m.max_delta = m.max_delta.max(out.report.delta);
                delta_nonzero += (out.report.delta > 0.0) as u64;
                for (c, v) in violated.iter_mut().zip(out.report.violated) {
                    *c += v as u64;
                }
                self.buffer.put_outcome(
                    k,
                    cfg.reward_scale * out.reward,
                    out.report.delta,
                    out.termination,
                    0.0,
                );
                match out.termination {
                    Termination::Running => {
                        slot.actor = out.actor_obs;
                        slot.critic = out.critic_obs;
                    }
                    done => {
                        m.episodes += 1;
                        if done == Termination::ObjectToppled {
                            topples += 1;
                        } else {
                            successes += slot.task.state.success_latched as u64;
                            pending.push(k);
                            terminal_obs.extend_from_slice(&out.critic_obs.0);
                        }
                        slot.restart(task_cfg);
                    }
                }
            }
            if !pending.is_empty() {
                let v = self.model.value(&terminal_obs, pending.len());
                for (k, v) in pending.iter().zip(v) {
                    self.buffer.next_value[*k] = v;
                }
            }
        }
        for (e, s) in self.slots.iter().enumerate() {
            c_obs[e * CRITIC_DIM..(e + 1) * CRITIC_DIM].copy_from_slice(&s.critic.0);
        }
        let bootstrap = self.model.value(&c_obs, n);
        for e in 0..n {
            let k = self.buffer.index(cfg.horizon - 1, e);
            if !self.buffer.termination[k].is_done() {
                self.buffer.next_value[k] = bootstrap[e];
            }
        }

        self.buffer.compute_advantages(cfg.gamma, cfg.lambda);
        let mut mb_rng = stream(self.setup.seed, purpose::MINIBATCH, it);
        let lr = cfg.learning_rate_at(it);
        m.update = ppo_update(
            &mut self.model,
            &mut self.optimizers,
            &self.buffer.batch(),
            cfg,
            lr,
            &mut mb_rng,
        )?;
        self.buffer.clear();

        let steps = (n * cfg.horizon) as f64;
        m.mean_reward /= steps;
        for x in &mut m.mean_terms {
            *x /= steps;
        }
        m.mean_delta /= steps;
        m.delta_nonzero = delta_nonzero as f64 / steps;
        m.violation = violated.map(|c| c as f64 / steps);
        if m.episodes > 0 {
            m.success_rate = successes as f64 / m.episodes as f64;
            m.topple_rate = topples as f64 / m.episodes as f64;
        } else {
            m.success_rate = f64::NAN;
            m.topple_rate = f64::NAN;
        }
        m.action_std = self.model.mean_std();
        self.iteration += 1;
        Ok(m)
    }
}

/// Receives per-iteration metrics and checkpoints.
pub trait TrainSink {
    fn on_iteration(&mut self, metrics: &IterationMetrics) -> Result<(), TrainError>;
    fn on_checkpoint(&mut self, checkpoint: &Checkpoint, is_final: bool) -> Result<(), TrainError>;
}

/// Keeps the metrics CSV in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub csv: String,
    pub checkpoints: Vec<u64>,
}

impl TrainSink for MemorySink {
    fn on_iteration(&mut self, metrics: &IterationMetrics) -> Result<(), TrainError> {
        if self.csv.is_empty() {
            self.csv.push_str(&IterationMetrics::csv_header());
            self.csv.push('\n');
        }
        self.csv.push_str(&metrics.csv_row());
        self.csv.push('\n');
        Ok(())
    }

    fn on_checkpoint(
        &mut self,
        checkpoint: &Checkpoint,
        _is_final: bool,
    ) -> Result<(), TrainError> {
        self.checkpoints.push(checkpoint.iteration);
        Ok(())
    }
}

/// Runs iterations until the configured budget is reached.
pub fn train(trainer: &mut Trainer, sink: &mut dyn TrainSink) -> Result<Checkpoint, TrainError> {
    let interval = trainer.setup.ppo.checkpoint_interval;
    while !trainer.is_finished() {
        let m = trainer.iterate()?;
        sink.on_iteration(&m)?;
        if interval > 0 && trainer.iteration.is_multiple_of(interval) && !trainer.is_finished() {
            sink.on_checkpoint(&trainer.checkpoint(), false)?;
        }
    }
    let ck = trainer.checkpoint();
    sink.on_checkpoint(&ck, true)?;
    Ok(ck)
}
