//! The pushing task as seen by learners: environment step plus reward and
//! constraint evaluation.

use serde::{Deserialize, Serialize};

use crate::constraints::{
    evaluate_constraints, ConstraintLimits, ConstraintReport, ConstraintsConfig,
};
use crate::env::{
    build_actor_obs, build_critic_obs, env_step, reset_sample, ActionVec, ActorObs, CriticObs,
    EnvConfig, EnvError, EnvState, EpisodeSpec, Termination, Transition,
};
use crate::physics::WorldConfig;
use crate::rewards::{reward_terms, total_reward, RewardConfig, RewardTerms};
use crate::rng::SimRng;

/// Everything that defines the task dynamics and objective.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub world: WorldConfig,
    pub env: EnvConfig,
    pub reward: RewardConfig,
    pub constraints: ConstraintsConfig,
}

impl TaskConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.world.validate()?;
        self.env.validate()?;
        self.reward.validate()?;
        self.constraints.validate()
    }

    pub fn limits(&self) -> ConstraintLimits<'_> {
        ConstraintLimits {
            env: &self.env,
            arm: &self.world.arm,
            dt: self.world.dt,
            constraints: &self.constraints,
        }
    }
}

/// Result of one task step.
#[derive(Debug, Clone)]
pub struct TaskStep {
    pub actor_obs: ActorObs,
    pub critic_obs: CriticObs,
    pub reward: f64,
    pub terms: RewardTerms,
    pub report: ConstraintReport,
    pub termination: Termination,
    pub transition: Transition,
}

/// One running episode.
#[derive(Debug, Clone)]
pub struct PushTask {
    pub spec: EpisodeSpec,
    pub state: EnvState,
}

impl PushTask {
    /// Starts an episode; the stream drives sampling, noise and pushes.
    pub fn reset(rng: SimRng, cfg: &TaskConfig) -> (Self, ActorObs, CriticObs) {
        let (spec, mut state) = reset_sample(rng, &cfg.env, &cfg.world);
        let noise = cfg.env.observation_noise.then_some(&cfg.env.noise);
        let actor = build_actor_obs(&mut state, &spec, &cfg.world.arm.q_default, noise);
        let critic = build_critic_obs(&state, &spec, &cfg.world.arm.q_default);
        (Self { spec, state }, actor, critic)
    }

    pub fn step(
        &mut self,
        action: &ActionVec,
        cfg: &TaskConfig,
        iteration: u64,
    ) -> Result<TaskStep, EnvError> {
        let out = env_step(&mut self.state, &self.spec, action, &cfg.env, &cfg.world)?;
        let tr = out.transition;
        let terms = reward_terms(&tr, &self.spec, &cfg.reward);
        self.state.last_r2 = terms.r2;
        let reward = total_reward(&terms, &cfg.reward, iteration);
        let report = evaluate_constraints(&tr, &self.spec, &cfg.limits(), iteration);
        Ok(TaskStep {
            actor_obs: out.actor_obs,
            critic_obs: out.critic_obs,
            reward,
            terms,
            report,
            termination: tr.termination,
            transition: tr,
        })
    }
}
