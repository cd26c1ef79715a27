//! Actor (54) and critic (73) observation vectors.
//!
//! Relative quantities are expressed in the full robot base frame
//! `R_b = Rz(yaw) Ry(pitch) Rx(roll)` located at `(x, y, height)`.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use std::ops::Range;

use super::config::NoiseConfig;
use super::sampling::EpisodeSpec;
use super::EnvState;
use crate::physics::{ObjectParams, ObjectState, PlanarPose, RobotState};

pub const ACTOR_DIM: usize = 54;
pub const CRITIC_DIM: usize = 73;
pub const ACTION_DIM: usize = 11;

/// Named slices of the observation vectors, in row order.
pub mod layout {
    use std::ops::Range;

    pub const EE_OBJECT_POSITION: Range<usize> = 0..3;
    pub const OBJECT_ROTATION: Range<usize> = 3..12;
    pub const JOINT_POSITION: Range<usize> = 12..17;
    pub const BASE_LINEAR_VELOCITY: Range<usize> = 17..20;
    pub const BASE_ANGULAR_VELOCITY: Range<usize> = 20..23;
    pub const JOINT_VELOCITY: Range<usize> = 23..28;
    pub const PROJECTED_GRAVITY: Range<usize> = 28..31;
    pub const OBJECT_GOAL_POSITION: Range<usize> = 31..34;
    pub const GOAL_ROTATION: Range<usize> = 34..43;
    pub const PREVIOUS_ACTION: Range<usize> = 43..54;

    pub const CONTACT: Range<usize> = 54..55;
    pub const COM_POSITION: Range<usize> = 55..58;
    pub const MASS: Range<usize> = 58..59;
    pub const DIMENSIONS: Range<usize> = 59..62;
    pub const INERTIA: Range<usize> = 62..65;
    pub const OBJECT_LINEAR_VELOCITY: Range<usize> = 65..68;
    pub const OBJECT_ANGULAR_VELOCITY: Range<usize> = 68..71;
    pub const SHAPE: Range<usize> = 71..73;

    /// Actor rows as `(name, slice)`.
    pub const ACTOR: [(&str, Range<usize>); 10] = [
        ("ee_object_position", EE_OBJECT_POSITION),
        ("object_rotation", OBJECT_ROTATION),
        ("joint_position", JOINT_POSITION),
        ("base_linear_velocity", BASE_LINEAR_VELOCITY),
        ("base_angular_velocity", BASE_ANGULAR_VELOCITY),
        ("joint_velocity", JOINT_VELOCITY),
        ("projected_gravity", PROJECTED_GRAVITY),
        ("object_goal_position", OBJECT_GOAL_POSITION),
        ("goal_rotation", GOAL_ROTATION),
        ("previous_action", PREVIOUS_ACTION),
    ];

    /// Privileged critic rows.
    pub const PRIVILEGED: [(&str, Range<usize>); 8] = [
        ("contact", CONTACT),
        ("com_position", COM_POSITION),
        ("mass", MASS),
        ("dimensions", DIMENSIONS),
        ("inertia", INERTIA),
        ("object_linear_velocity", OBJECT_LINEAR_VELOCITY),
        ("object_angular_velocity", OBJECT_ANGULAR_VELOCITY),
        ("shape", SHAPE),
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActorObs(pub [f64; ACTOR_DIM]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticObs(pub [f64; CRITIC_DIM]);

impl ActorObs {
    pub fn slice(&self, r: Range<usize>) -> &[f64] {
        &self.0[r]
    }
}

impl CriticObs {
    pub fn slice(&self, r: Range<usize>) -> &[f64] {
        &self.0[r]
    }

    /// The leading actor block (noiseless).
    pub fn actor_part(&self) -> &[f64] {
        &self.0[..ACTOR_DIM]
    }
}

/// Base frame pose.
#[derive(Debug, Clone, Copy)]
pub struct BaseFrame {
    pub rotation: Matrix3<f64>,
    pub origin: Vector3<f64>,
}

impl BaseFrame {
    pub fn of(robot: &RobotState) -> Self {
        Self {
            rotation: robot
                .placement()
                .rotation()
                .to_rotation_matrix()
                .into_inner(),
            origin: Vector3::new(robot.base_pose.x, robot.base_pose.y, robot.base_height),
        }
    }

    pub fn vector_to_base(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * v
    }

    pub fn point_to_base(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.origin)
    }
}

/// Goal frame: the object, upright, at the goal pose.
pub fn goal_state(goal: &PlanarPose) -> ObjectState {
    ObjectState::at(*goal)
}

fn put(out: &mut [f64], r: Range<usize>, values: &[f64]) {
    out[r].copy_from_slice(values);
}

fn row_major(m: &Matrix3<f64>) -> [f64; 9] {
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 0)],
        m[(2, 1)],
        m[(2, 2)],
    ]
}

/// Noiseless actor observation from world ground truth.
pub fn clean_actor_obs(
    robot: &RobotState,
    object: &ObjectState,
    spec: &EpisodeSpec,
    q_default: &[f64; 5],
    prev_action: &[f64; ACTION_DIM],
) -> ActorObs {
    use layout::*;
    let params = &spec.object_params;
    let base = BaseFrame::of(robot);
    let goal = goal_state(&spec.goal_pose);
    let p_o = object.centroid_world(params);
    let p_g = goal.centroid_world(params);
    let r_o = object.rotation();
    let r_g = goal.rotation();

    let mut o = [0.0; ACTOR_DIM];
    put(
        &mut o,
        EE_OBJECT_POSITION,
        base.vector_to_base(&(p_o - robot.ee_pos_world)).as_slice(),
    );
    put(
        &mut o,
        OBJECT_ROTATION,
        &row_major(&(base.rotation.transpose() * r_o)),
    );
    let dq: [f64; 5] = std::array::from_fn(|i| robot.q_arm[i] - q_default[i]);
    put(&mut o, JOINT_POSITION, &dq);
    put(
        &mut o,
        BASE_LINEAR_VELOCITY,
        base.vector_to_base(&robot.base_velocity_world()).as_slice(),
    );
    put(
        &mut o,
        BASE_ANGULAR_VELOCITY,
        base.vector_to_base(&robot.base_angular_velocity_world())
            .as_slice(),
    );
    put(&mut o, JOINT_VELOCITY, &robot.qd_arm);
    put(
        &mut o,
        PROJECTED_GRAVITY,
        base.vector_to_base(&Vector3::new(0.0, 0.0, -1.0))
            .as_slice(),
    );
    put(
        &mut o,
        OBJECT_GOAL_POSITION,
        base.vector_to_base(&(p_g - p_o)).as_slice(),
    );
    put(&mut o, GOAL_ROTATION, &row_major(&(r_o.transpose() * r_g)));
    put(&mut o, PREVIOUS_ACTION, prev_action);
    ActorObs(o)
}

/// Adds uniform noise per observation group; the previous action is left
/// untouched.
pub fn add_actor_noise<R: Rng + ?Sized>(obs: &mut ActorObs, noise: &NoiseConfig, rng: &mut R) {
    use layout::*;
    let groups = [
        (EE_OBJECT_POSITION, noise.ee_object_position),
        (OBJECT_ROTATION, noise.object_rotation),
        (JOINT_POSITION, noise.joint_position),
        (BASE_LINEAR_VELOCITY, noise.base_linear_velocity),
        (BASE_ANGULAR_VELOCITY, noise.base_angular_velocity),
        (JOINT_VELOCITY, noise.joint_velocity),
        (PROJECTED_GRAVITY, noise.projected_gravity),
        (OBJECT_GOAL_POSITION, noise.object_goal_position),
        (GOAL_ROTATION, noise.goal_rotation),
    ];
    for (range, half_width) in groups {
        for v in &mut obs.0[range] {
            *v += half_width * (2.0 * rng.random::<f64>() - 1.0);
        }
    }
}

/// Actor observation for the current state, with noise iff `noise` is given.
pub fn build_actor_obs(
    state: &mut EnvState,
    spec: &EpisodeSpec,
    q_default: &[f64; 5],
    noise: Option<&NoiseConfig>,
) -> ActorObs {
    let mut obs = clean_actor_obs(
        &state.robot,
        &state.object,
        spec,
        q_default,
        &state.prev_action,
    );
    if let Some(n) = noise {
        add_actor_noise(&mut obs, n, &mut state.rng);
    }
    obs
}

/// Privileged block appended to the noiseless actor observation.
pub fn privileged_obs(
    robot: &RobotState,
    object: &ObjectState,
    params: &ObjectParams,
    in_contact: bool,
) -> [f64; 19] {
    let base = BaseFrame::of(robot);
    let mut o = [0.0; 19];
    let shift = ACTOR_DIM;
    let mut put_p =
        |r: Range<usize>, v: &[f64]| o[r.start - shift..r.end - shift].copy_from_slice(v);
    use layout::*;
    put_p(CONTACT, &[if in_contact { 1.0 } else { 0.0 }]);
    put_p(
        COM_POSITION,
        base.point_to_base(&object.com_world(params)).as_slice(),
    );
    put_p(MASS, &[params.mass]);
    put_p(DIMENSIONS, params.dims.as_slice());
    put_p(INERTIA, params.principal_inertia().as_slice());
    let v_o = Vector3::new(object.lin_vel.x, object.lin_vel.y, 0.0);
    put_p(OBJECT_LINEAR_VELOCITY, base.vector_to_base(&v_o).as_slice());
    put_p(
        OBJECT_ANGULAR_VELOCITY,
        base.vector_to_base(&Vector3::new(0.0, 0.0, object.yaw_rate))
            .as_slice(),
    );
    put_p(SHAPE, &params.shape.one_hot());
    o
}

/// Critic observation: noiseless actor block followed by privileged state.
pub fn build_critic_obs(state: &EnvState, spec: &EpisodeSpec, q_default: &[f64; 5]) -> CriticObs {
    let actor = clean_actor_obs(
        &state.robot,
        &state.object,
        spec,
        q_default,
        &state.prev_action,
    );
    let pr = privileged_obs(
        &state.robot,
        &state.object,
        &spec.object_params,
        state.contact.in_contact,
    );
    let mut o = [0.0; CRITIC_DIM];
    o[..ACTOR_DIM].copy_from_slice(&actor.0);
    o[ACTOR_DIM..].copy_from_slice(&pr);
    CriticObs(o)
}
