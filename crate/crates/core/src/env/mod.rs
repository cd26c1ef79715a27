//! Pushing task environment: resets, observations, actions, success and
//! termination.
//!
//! An environment is a value-state machine ([`EnvState`]) driven by
//! [`env_step`]. Each state owns its random stream, so a batch of
//! environments can be stepped independently.

pub mod action;
pub mod config;
pub mod obs;
pub mod sampling;

use nalgebra::Vector2;
use rand::Rng;
use thiserror::Error;

pub use action::{apply_action, ActionVec, Commands};
pub use config::{EnvConfig, NoiseConfig, ObjectOverride, RandomizationConfig, ReachTarget};
pub use obs::{
    build_actor_obs, build_critic_obs, ActorObs, CriticObs, ACTION_DIM, ACTOR_DIM, CRITIC_DIM,
};
pub use sampling::{randomize_domain, sample_episode, EpisodeSpec, RobotPerturbation};

use crate::physics::{
    step_world, wrap_angle, ContactInfo, ObjectState, PhysicsError, PlanarPose, RobotState,
    WorldConfig,
};
use crate::rng::SimRng;

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Running,
    Timeout,
    ObjectToppled,
}

impl Termination {
    pub fn is_done(self) -> bool {
        self != Termination::Running
    }

    pub fn name(self) -> &'static str {
        match self {
            Termination::Running => "running",
            Termination::Timeout => "timeout",
            Termination::ObjectToppled => "object_toppled",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("stepped an environment that already terminated ({0:?})")]
    AlreadyTerminated(Termination),
    #[error("non-finite action component {0}")]
    NonFiniteAction(usize),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

/// Mutable per-environment state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub robot: RobotState,
    pub object: ObjectState,
    pub contact: ContactInfo,
    pub step: usize,
    pub success_latched: bool,
    pub prev_action: [f64; ACTION_DIM],
    pub prev_base_delta: [f64; 6],
    pub prev_arm_delta: [f64; 5],
    /// Reaching reward of the previous step (held while successful).
    pub last_r2: f64,
    pub rng: SimRng,
    pub next_push_step: usize,
    pub termination: Termination,
}

/// Everything the reward and constraint terms need about one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Steps completed including this one.
    pub step: usize,
    pub robot_before: RobotState,
    pub robot: RobotState,
    pub object_before: ObjectState,
    pub object: ObjectState,
    pub contact: ContactInfo,
    pub action: [f64; ACTION_DIM],
    pub commands: Commands,
    pub prev_base_delta: [f64; 6],
    pub prev_arm_delta: [f64; 5],
    pub success_before: bool,
    pub success_latched: bool,
    pub prev_r2: f64,
    pub termination: Termination,
    pub disturbance: Option<Vector2<f64>>,
}

fn push_delay<R: Rng + ?Sized>(rng: &mut R, cfg: &EnvConfig, dt: f64) -> usize {
    let secs =
        cfg.push_interval[0] + (cfg.push_interval[1] - cfg.push_interval[0]) * rng.random::<f64>();
    ((secs / dt).round() as usize).max(1)
}

/// Samples an episode and its initial state. The random stream moves into
/// the state and is reused for observation noise and base pushes.
pub fn reset_sample(
    mut rng: SimRng,
    cfg: &EnvConfig,
    world: &WorldConfig,
) -> (EpisodeSpec, EnvState) {
    let spec = sample_episode(&mut rng, cfg, world);
    let next_push_step = push_delay(&mut rng, cfg, world.dt);
    let state = EnvState {
        robot: spec.initial_robot,
        object: spec.initial_object,
        contact: ContactInfo::none(),
        step: 0,
        success_latched: false,
        prev_action: [0.0; ACTION_DIM],
        prev_base_delta: [0.0; 6],
        prev_arm_delta: [0.0; 5],
        last_r2: 0.0,
        rng,
        next_push_step,
        termination: Termination::Running,
    };
    (spec, state)
}

/// Planar distance and wrapped yaw error to the goal.
pub fn goal_errors(object: &ObjectState, goal: &PlanarPose) -> (f64, f64) {
    let d = (object.pose.position() - goal.position()).norm();
    (d, wrap_angle(object.pose.yaw - goal.yaw).abs())
}

/// Success iff distance and yaw error are both within tolerance (inclusive).
pub fn check_success(object: &ObjectState, goal: &PlanarPose, cfg: &EnvConfig) -> bool {
    let (d, yaw) = goal_errors(object, goal);
    // Small slack absorbs rounding in the tolerance conversion.
    d <= cfg.success_distance + 1e-12 && yaw <= cfg.success_yaw_deg.to_radians() + 1e-12
}

/// The abstracted base cannot fall, so only object toppling and timeouts end
/// an episode.
pub fn check_termination(state: &EnvState, spec: &EpisodeSpec) -> Termination {
    if state.object.toppled {
        Termination::ObjectToppled
    } else if state.step >= spec.episode_step_limit {
        Termination::Timeout
    } else {
        Termination::Running
    }
}

/// Observations and record of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub actor_obs: ActorObs,
    pub critic_obs: CriticObs,
    pub transition: Transition,
}

/// Advances the environment by one control step.
pub fn env_step(
    state: &mut EnvState,
    spec: &EpisodeSpec,
    action: &ActionVec,
    cfg: &EnvConfig,
    world: &WorldConfig,
) -> Result<StepOutcome, EnvError> {
    if state.termination.is_done() {
        return Err(EnvError::AlreadyTerminated(state.termination));
    }
    if let Some(i) = action.0.iter().position(|v| !v.is_finite()) {
        return Err(EnvError::NonFiniteAction(i));
    }
    let commands = apply_action(action, cfg, &world.arm);

    let disturbance = if state.step + 1 >= state.next_push_step {
        let speed =
            cfg.push_speed[0] + (cfg.push_speed[1] - cfg.push_speed[0]) * state.rng.random::<f64>();
        let heading = std::f64::consts::PI * (2.0 * state.rng.random::<f64>() - 1.0);
        state.next_push_step += push_delay(&mut state.rng, cfg, world.dt);
        Some(Vector2::new(speed * heading.cos(), speed * heading.sin()))
    } else {
        None
    };

    let mut episode_world = world.clone();
    episode_world.base_time_constant = spec.base_time_constant;
    let out = step_world(
        &state.robot,
        &state.object,
        &spec.object_params,
        &episode_world,
        &commands.base_cmd_clipped,
        &commands.q_cmd_clipped,
        disturbance,
    )?;

    let robot_before = state.robot;
    let object_before = state.object;
    let success_before = state.success_latched;
    state.robot = out.robot;
    state.object = out.object;
    state.contact = out.contact;
    state.step += 1;
    if !state.success_latched && check_success(&state.object, &spec.goal_pose, cfg) {
        state.success_latched = true;
    }
    state.termination = check_termination(state, spec);

    let transition = Transition {
        step: state.step,
        robot_before,
        robot: state.robot,
        object_before,
        object: state.object,
        contact: state.contact,
        action: action.0,
        commands,
        prev_base_delta: state.prev_base_delta,
        prev_arm_delta: state.prev_arm_delta,
        success_before,
        success_latched: state.success_latched,
        prev_r2: state.last_r2,
        termination: state.termination,
        disturbance,
    };
    state.prev_action = action.0;
    state.prev_base_delta = commands.base_delta;
    state.prev_arm_delta = commands.arm_delta;

    let noise = cfg.observation_noise.then_some(&cfg.noise);
    let actor_obs = build_actor_obs(state, spec, &world.arm.q_default, noise);
    let critic_obs = build_critic_obs(state, spec, &world.arm.q_default);
    Ok(StepOutcome {
        actor_obs,
        critic_obs,
        transition,
    })
}
