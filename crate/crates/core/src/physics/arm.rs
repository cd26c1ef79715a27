//! Five-joint arm mounted on the robot base.
//!
//! Chain: world → base (pose, height, roll/pitch) → shoulder mount
//! `(0.30, 0, 0.10)` → J1 yaw → J2 pitch, link 0.30 → J3 pitch, link 0.30 →
//! J4 pitch, link 0.25 → J5 yaw → end-effector offset 0.10 along the link.
//! Positive pitch rotates the link axis downward.

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub const NUM_JOINTS: usize = 5;

pub const SHOULDER_MOUNT: [f64; 3] = [0.30, 0.0, 0.10];
pub const UPPER_ARM: f64 = 0.30;
pub const FOREARM: f64 = 0.30;
pub const WRIST_LINK: f64 = 0.25;
pub const EE_OFFSET: f64 = 0.10;

/// Arm joint limits, default pose and impedance gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmConfig {
    pub q_lower: [f64; NUM_JOINTS],
    pub q_upper: [f64; NUM_JOINTS],
    pub q_default: [f64; NUM_JOINTS],
    /// Joint velocity limit used by the velocity and action-rate constraints.
    pub qd_limit: f64,
    pub torque_limit: f64,
    pub stiffness: f64,
    pub damping: f64,
}

impl Default for ArmConfig {
    fn default() -> Self {
        Self {
            q_lower: [-2.9, -0.3, -2.5, -2.2, -2.9],
            q_upper: [2.9, 1.6, 2.5, 2.2, 2.9],
            q_default: [0.0, 0.6, -1.2, 0.6, 0.0],
            qd_limit: 1.8,
            torque_limit: 30.0,
            stiffness: 40.0,
            damping: 2.0,
        }
    }
}

impl ArmConfig {
    pub fn clip(&self, q: &[f64; NUM_JOINTS]) -> [f64; NUM_JOINTS] {
        std::array::from_fn(|i| q[i].clamp(self.q_lower[i], self.q_upper[i]))
    }
}

/// Base placement used by forward kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BasePlacement {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub height: f64,
    pub roll: f64,
    pub pitch: f64,
}

impl BasePlacement {
    /// `R = Rz(yaw) · Ry(pitch) · Rx(roll)`.
    pub fn rotation(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_euler_angles(self.roll, self.pitch, self.yaw)
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::new(self.x, self.y, self.height),
            self.rotation(),
        )
    }
}

/// World positions of the shoulder, elbow, wrist, J5 and end-effector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPoints {
    pub shoulder: Vector3<f64>,
    pub elbow: Vector3<f64>,
    pub wrist: Vector3<f64>,
    pub flange: Vector3<f64>,
    pub ee: Vector3<f64>,
}

fn yaw(q: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q)
}

fn pitch(q: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::y_axis(), q)
}

fn link(len: f64) -> Isometry3<f64> {
    Isometry3::translation(len, 0.0, 0.0)
}

pub fn arm_points(base: &BasePlacement, q: &[f64; NUM_JOINTS]) -> ArmPoints {
    let mut t = base.isometry()
        * Isometry3::translation(SHOULDER_MOUNT[0], SHOULDER_MOUNT[1], SHOULDER_MOUNT[2]);
    let shoulder = t.translation.vector;
    t *= Isometry3::from_parts(Translation3::identity(), yaw(q[0]));
    t = t * Isometry3::from_parts(Translation3::identity(), pitch(q[1])) * link(UPPER_ARM);
    let elbow = t.translation.vector;
    t = t * Isometry3::from_parts(Translation3::identity(), pitch(q[2])) * link(FOREARM);
    let wrist = t.translation.vector;
    t = t * Isometry3::from_parts(Translation3::identity(), pitch(q[3])) * link(WRIST_LINK);
    let flange = t.translation.vector;
    t = t * Isometry3::from_parts(Translation3::identity(), yaw(q[4])) * link(EE_OFFSET);
    ArmPoints {
        shoulder,
        elbow,
        wrist,
        flange,
        ee: t.translation.vector,
    }
}

/// End-effector position in world coordinates.
pub fn forward_kinematics(base: &BasePlacement, q: &[f64; NUM_JOINTS]) -> Vector3<f64> {
    arm_points(base, q).ee
}
