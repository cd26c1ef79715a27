//! Fixed-step world update: abstracted base, impedance-tracked arm and the
//! pushed object.

use nalgebra::{Rotation2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::arm::{forward_kinematics, ArmConfig, BasePlacement, NUM_JOINTS};
use super::contact::{resolve_contact, ContactInfo};
use super::object::{ObjectParams, ObjectState, PlanarPose};
use super::pushing::limit_surface_twist;
use super::tilt::tilt_update;

/// Integration constants and contact model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub dt: f64,
    pub gravity: f64,
    /// Penalty stiffness of the EE-object contact, N/m.
    pub contact_stiffness: f64,
    pub contact_force_cap: f64,
    /// Slip speed over which EE-object friction saturates, m/s.
    pub contact_slip_velocity: f64,
    /// Normalised twist speed per unit of limit-surface excess, m/s.
    pub limit_surface_gain: f64,
    /// Tilt rate per unit of normalised tipping-moment excess, rad/s.
    pub tilt_rate_gain: f64,
    /// Rate at which an unloaded tilt returns to upright, rad/s.
    pub tilt_restore_rate: f64,
    /// First-order lag of the base command tracking, s.
    pub base_time_constant: f64,
    pub arm_time_constant: f64,
    pub arm_rate_limit: f64,
    pub arm: ArmConfig,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            dt: 0.02,
            gravity: 9.81,
            contact_stiffness: 2000.0,
            contact_force_cap: 200.0,
            contact_slip_velocity: 0.05,
            limit_surface_gain: 1.0,
            tilt_rate_gain: 1.0,
            tilt_restore_rate: 1.0,
            base_time_constant: 0.3,
            arm_time_constant: 0.1,
            arm_rate_limit: 2.0,
            arm: ArmConfig::default(),
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("dt", self.dt),
            ("gravity", self.gravity),
            ("contact_stiffness", self.contact_stiffness),
            ("contact_force_cap", self.contact_force_cap),
            ("contact_slip_velocity", self.contact_slip_velocity),
            ("limit_surface_gain", self.limit_surface_gain),
            ("tilt_rate_gain", self.tilt_rate_gain),
            ("tilt_restore_rate", self.tilt_restore_rate),
            ("base_time_constant", self.base_time_constant),
            ("arm_time_constant", self.arm_time_constant),
            ("arm_rate_limit", self.arm_rate_limit),
            ("arm.qd_limit", self.arm.qd_limit),
            ("arm.torque_limit", self.arm.torque_limit),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("world.{name} must be positive, got {v}"));
            }
        }
        for i in 0..NUM_JOINTS {
            if self.arm.q_lower[i] >= self.arm.q_upper[i] {
                return Err(format!("world.arm joint {} has lower >= upper", i + 1));
            }
        }
        Ok(())
    }
}

/// Base command `(v_x, v_y, ω_z, roll, pitch, height)`; velocities are in the
/// heading frame.
pub type BaseCommand = [f64; 6];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub base_pose: PlanarPose,
    pub base_height: f64,
    pub base_roll: f64,
    pub base_pitch: f64,
    /// Planar velocity in the heading frame.
    pub base_lin_vel: Vector2<f64>,
    pub base_yaw_rate: f64,
    pub base_height_rate: f64,
    /// `(roll, pitch)` rates.
    pub base_rp_rate: [f64; 2],
    pub q_arm: [f64; NUM_JOINTS],
    pub qd_arm: [f64; NUM_JOINTS],
    pub tau_arm: [f64; NUM_JOINTS],
    pub ee_pos_world: Vector3<f64>,
}

impl RobotState {
    /// Robot at rest at `pose` with the given arm configuration.
    pub fn at_rest(pose: PlanarPose, height: f64, q_arm: [f64; NUM_JOINTS]) -> Self {
        let mut s = Self {
            base_pose: pose,
            base_height: height,
            base_roll: 0.0,
            base_pitch: 0.0,
            base_lin_vel: Vector2::zeros(),
            base_yaw_rate: 0.0,
            base_height_rate: 0.0,
            base_rp_rate: [0.0; 2],
            q_arm,
            qd_arm: [0.0; NUM_JOINTS],
            tau_arm: [0.0; NUM_JOINTS],
            ee_pos_world: Vector3::zeros(),
        };
        s.ee_pos_world = s.forward_kinematics();
        s
    }

    pub fn placement(&self) -> BasePlacement {
        BasePlacement {
            x: self.base_pose.x,
            y: self.base_pose.y,
            yaw: self.base_pose.yaw,
            height: self.base_height,
            roll: self.base_roll,
            pitch: self.base_pitch,
        }
    }

    pub fn forward_kinematics(&self) -> Vector3<f64> {
        forward_kinematics(&self.placement(), &self.q_arm)
    }

    /// Base linear velocity in world coordinates.
    pub fn base_velocity_world(&self) -> Vector3<f64> {
        let v = Rotation2::new(self.base_pose.yaw) * self.base_lin_vel;
        Vector3::new(v.x, v.y, self.base_height_rate)
    }

    /// Base angular velocity in world coordinates (small-angle composition of
    /// yaw rate and roll/pitch rates).
    pub fn base_angular_velocity_world(&self) -> Vector3<f64> {
        let rp = Rotation2::new(self.base_pose.yaw)
            * Vector2::new(self.base_rp_rate[0], self.base_rp_rate[1]);
        Vector3::new(rp.x, rp.y, self.base_yaw_rate)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PhysicsError {
    #[error("non-finite {0} after world step")]
    NonFinite(&'static str),
}

/// One world step's outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub robot: RobotState,
    pub object: ObjectState,
    pub contact: ContactInfo,
}

fn lag(current: f64, target: f64, alpha: f64) -> f64 {
    current + alpha * (target - current)
}

/// Advances robot and object by exactly one `cfg.dt`.
///
/// `base_cmd` and `q_cmd` must already be clipped to their physical ranges.
/// `disturbance` is a world-frame planar velocity impulse added to the base.
pub fn step_world(
    robot: &RobotState,
    obj: &ObjectState,
    params: &ObjectParams,
    cfg: &WorldConfig,
    base_cmd: &BaseCommand,
    q_cmd: &[f64; NUM_JOINTS],
    disturbance: Option<Vector2<f64>>,
) -> Result<StepOutput, PhysicsError> {
    let dt = cfg.dt;
    let mut r = *robot;

    // Base: first-order tracking of the 6-D command.
    let alpha_b = 1.0 - (-dt / cfg.base_time_constant).exp();
    if let Some(kick) = disturbance {
        r.base_lin_vel += Rotation2::new(-r.base_pose.yaw) * kick;
    }
    r.base_lin_vel.x = lag(r.base_lin_vel.x, base_cmd[0], alpha_b);
    r.base_lin_vel.y = lag(r.base_lin_vel.y, base_cmd[1], alpha_b);
    r.base_yaw_rate = lag(r.base_yaw_rate, base_cmd[2], alpha_b);
    let roll = lag(r.base_roll, base_cmd[3], alpha_b);
    let pitch = lag(r.base_pitch, base_cmd[4], alpha_b);
    let height = lag(r.base_height, base_cmd[5], alpha_b);
    r.base_rp_rate = [(roll - r.base_roll) / dt, (pitch - r.base_pitch) / dt];
    r.base_height_rate = (height - r.base_height) / dt;
    r.base_roll = roll;
    r.base_pitch = pitch;
    r.base_height = height;
    r.base_pose.yaw += r.base_yaw_rate * dt;
    let v_world = Rotation2::new(r.base_pose.yaw) * r.base_lin_vel;
    r.base_pose.x += v_world.x * dt;
    r.base_pose.y += v_world.y * dt;

    // Arm: rate-limited first-order tracking and impedance torque proxy.
    let alpha_a = 1.0 - (-dt / cfg.arm_time_constant).exp();
    let max_step = cfg.arm_rate_limit * dt;
    for i in 0..NUM_JOINTS {
        let step = (alpha_a * (q_cmd[i] - r.q_arm[i])).clamp(-max_step, max_step);
        r.q_arm[i] += step;
        r.qd_arm[i] = step / dt;
        r.tau_arm[i] = cfg.arm.stiffness * (q_cmd[i] - r.q_arm[i]) - cfg.arm.damping * r.qd_arm[i];
    }
    r.ee_pos_world = r.forward_kinematics();
    let ee_vel = (r.ee_pos_world - robot.ee_pos_world) / dt;

    // Object: contact, quasi-static twist and tilt.
    let contact = resolve_contact(&r.ee_pos_world, &ee_vel, params, obj);
    let mut o = *obj;
    if !obj.toppled {
        let twist = limit_surface_twist(&contact, params, obj, cfg);
        let tilt = tilt_update(&contact, params, obj, cfg);
        o.lin_vel = twist.linear();
        o.yaw_rate = twist.omega;
        // Rigid planar motion about the CoM ground projection.
        let com = obj.com_world(params).xy();
        let dpsi = twist.omega * dt;
        let rel = Rotation2::new(dpsi) * (obj.pose.position() - com);
        let com_new = com + twist.linear() * dt;
        o.pose.x = com_new.x + rel.x;
        o.pose.y = com_new.y + rel.y;
        o.pose.yaw = obj.pose.yaw + dpsi;
        o.tilt = tilt.tilt;
        o.tilt.axis_yaw += dpsi;
        o.toppled = tilt.toppled;
    } else {
        o.lin_vel = Vector2::zeros();
        o.yaw_rate = 0.0;
    }

    check_finite(&r, &o)?;
    Ok(StepOutput {
        robot: r,
        object: o,
        contact,
    })
}

fn check_finite(r: &RobotState, o: &ObjectState) -> Result<(), PhysicsError> {
    let base = [
        r.base_pose.x,
        r.base_pose.y,
        r.base_pose.yaw,
        r.base_height,
        r.base_roll,
        r.base_pitch,
        r.base_lin_vel.x,
        r.base_lin_vel.y,
        r.base_yaw_rate,
    ];
    if base.iter().any(|v| !v.is_finite()) {
        return Err(PhysicsError::NonFinite("base state"));
    }
    if r.q_arm
        .iter()
        .chain(&r.qd_arm)
        .chain(&r.tau_arm)
        .any(|v| !v.is_finite())
        || !r.ee_pos_world.iter().all(|v| v.is_finite())
    {
        return Err(PhysicsError::NonFinite("arm state"));
    }
    let obj = [
        o.pose.x,
        o.pose.y,
        o.pose.yaw,
        o.tilt.angle,
        o.tilt.axis_yaw,
        o.lin_vel.x,
        o.lin_vel.y,
        o.yaw_rate,
    ];
    if obj.iter().any(|v| !v.is_finite()) {
        return Err(PhysicsError::NonFinite("object state"));
    }
    Ok(())
}
