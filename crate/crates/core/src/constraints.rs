//! Constraint values and constraints-as-terminations probabilities.
//!
//! Each constraint family yields a vector of raw values that are satisfied
//! when `<= 0`. A step's termination probability is
//!
//! ```text
//! δ_t = max_i max_k  p_i(it) · clamp(max(0, c_ik) / s_i, 0, 1)
//! ```
//!
//! with `p_i(it)` interpolated linearly from its initial to final value over
//! the curriculum. This functional form is a reconstruction: the underlying
//! method only fixes the per-constraint maxima.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::env::obs::BaseFrame;
use crate::env::{EnvConfig, EpisodeSpec, Transition};
use crate::physics::{
    arm_points, obb_keypoints, ArmConfig, ObjectParams, ObjectState, RobotState, Shape, NUM_JOINTS,
};

/// Number of constraint families (rows), including the declared-only leg row.
pub const NUM_CONSTRAINTS: usize = 9;
/// Families that are evaluated.
pub const NUM_IMPLEMENTED: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    BaseCommand,
    ArmCommand,
    ArmActionRate,
    JointPosition,
    JointVelocity,
    JointTorque,
    LegTorque,
    Collision,
    ObjectBalance,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; NUM_CONSTRAINTS] = [
        ConstraintKind::BaseCommand,
        ConstraintKind::ArmCommand,
        ConstraintKind::ArmActionRate,
        ConstraintKind::JointPosition,
        ConstraintKind::JointVelocity,
        ConstraintKind::JointTorque,
        ConstraintKind::LegTorque,
        ConstraintKind::Collision,
        ConstraintKind::ObjectBalance,
    ];

    /// Families with a value formula, in report order.
    pub const IMPLEMENTED: [ConstraintKind; NUM_IMPLEMENTED] = [
        ConstraintKind::BaseCommand,
        ConstraintKind::ArmCommand,
        ConstraintKind::ArmActionRate,
        ConstraintKind::JointPosition,
        ConstraintKind::JointVelocity,
        ConstraintKind::JointTorque,
        ConstraintKind::Collision,
        ConstraintKind::ObjectBalance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::BaseCommand => "base_command",
            ConstraintKind::ArmCommand => "arm_command",
            ConstraintKind::ArmActionRate => "arm_action_rate",
            ConstraintKind::JointPosition => "joint_position",
            ConstraintKind::JointVelocity => "joint_velocity",
            ConstraintKind::JointTorque => "joint_torque",
            ConstraintKind::LegTorque => "leg_torque",
            ConstraintKind::Collision => "collision",
            ConstraintKind::ObjectBalance => "object_balance",
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            ConstraintKind::BaseCommand => 6,
            ConstraintKind::LegTorque => 12,
            ConstraintKind::Collision => NUM_COLLISION_PAIRS,
            ConstraintKind::ObjectBalance => 1,
            _ => NUM_JOINTS,
        }
    }

    pub fn is_implemented(self) -> bool {
        self != ConstraintKind::LegTorque
    }
}

/// One row of the constraint table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub p_max_initial: f64,
    pub p_max_final: f64,
    /// Iteration at which `p_max_final` is reached; `None` keeps `p_max_initial`.
    pub curriculum_end_iteration: Option<u64>,
    /// Constraint value at which the termination probability saturates.
    pub scale: f64,
    /// Disabled constraints are still reported but never terminate.
    #[serde(default = "enabled_default")]
    pub enabled: bool,
}

fn enabled_default() -> bool {
    true
}

impl ConstraintSpec {
    pub fn curriculum(initial: f64, fin: f64, scale: f64) -> Self {
        Self {
            p_max_initial: initial,
            p_max_final: fin,
            curriculum_end_iteration: Some(CURRICULUM_END),
            scale,
            enabled: true,
        }
    }

    pub fn fixed(p_max: f64, scale: f64) -> Self {
        Self {
            p_max_initial: p_max,
            p_max_final: p_max,
            curriculum_end_iteration: None,
            scale,
            enabled: true,
        }
    }

    /// Maximum termination probability at a learning iteration.
    pub fn p_max(&self, iteration: u64) -> f64 {
        match self.curriculum_end_iteration {
            None => self.p_max_initial,
            Some(0) => self.p_max_final,
            Some(end) if iteration >= end => self.p_max_final,
            Some(end) => {
                let f = iteration as f64 / end as f64;
                self.p_max_initial + (self.p_max_final - self.p_max_initial) * f
            }
        }
    }

    /// Termination probability contributed by one raw value.
    pub fn probability(&self, value: f64, iteration: u64) -> f64 {
        if !self.enabled || value <= 0.0 {
            return 0.0;
        }
        self.p_max(iteration) * (value / self.scale).clamp(0.0, 1.0)
    }
}

pub const CURRICULUM_END: u64 = 12_000;

/// Robot body volumes checked against the object and the arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollisionGeometry {
    /// Half extents of the base body box around the base origin, m.
    pub body_half_extents: [f64; 3],
    /// Horizontal margin of the leg region beyond the body footprint, m.
    pub leg_margin: f64,
    /// Samples per arm segment for the arm-vs-body check.
    pub arm_samples: usize,
}

impl Default for CollisionGeometry {
    fn default() -> Self {
        Self {
            body_half_extents: [0.35, 0.15, 0.10],
            leg_margin: 0.10,
            arm_samples: 6,
        }
    }
}

/// Constraint table and limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintsConfig {
    pub base_command: ConstraintSpec,
    pub arm_command: ConstraintSpec,
    pub arm_action_rate: ConstraintSpec,
    pub joint_position: ConstraintSpec,
    pub joint_velocity: ConstraintSpec,
    pub joint_torque: ConstraintSpec,
    /// Declared for completeness; there are no legs to evaluate.
    pub leg_torque: ConstraintSpec,
    pub collision: ConstraintSpec,
    pub object_balance: ConstraintSpec,
    pub balance_angle_limit_deg: f64,
    /// Base speed above which the balance constraint is active, m/s.
    pub balance_speed_threshold: f64,
    pub geometry: CollisionGeometry,
}

impl Default for ConstraintsConfig {
    fn default() -> Self {
        Self {
            base_command: ConstraintSpec::curriculum(0.01, 0.2, 0.2),
            arm_command: ConstraintSpec::curriculum(0.05, 0.9, 0.2),
            arm_action_rate: ConstraintSpec::curriculum(0.0, 0.05, 0.2),
            joint_position: ConstraintSpec::curriculum(0.05, 0.9, 0.2),
            joint_velocity: ConstraintSpec::curriculum(0.05, 0.9, 0.2),
            joint_torque: ConstraintSpec::curriculum(0.0, 0.015, 5.0),
            leg_torque: ConstraintSpec::curriculum(0.0, 0.01, 5.0),
            collision: ConstraintSpec::fixed(1.0, 1.0),
            object_balance: ConstraintSpec::fixed(0.25, 0.1),
            balance_angle_limit_deg: 10.0,
            balance_speed_threshold: 0.05,
            geometry: CollisionGeometry::default(),
        }
    }
}

impl ConstraintsConfig {
    pub fn spec(&self, kind: ConstraintKind) -> &ConstraintSpec {
        match kind {
            ConstraintKind::BaseCommand => &self.base_command,
            ConstraintKind::ArmCommand => &self.arm_command,
            ConstraintKind::ArmActionRate => &self.arm_action_rate,
            ConstraintKind::JointPosition => &self.joint_position,
            ConstraintKind::JointVelocity => &self.joint_velocity,
            ConstraintKind::JointTorque => &self.joint_torque,
            ConstraintKind::LegTorque => &self.leg_torque,
            ConstraintKind::Collision => &self.collision,
            ConstraintKind::ObjectBalance => &self.object_balance,
        }
    }

    pub fn spec_mut(&mut self, kind: ConstraintKind) -> &mut ConstraintSpec {
        match kind {
            ConstraintKind::BaseCommand => &mut self.base_command,
            ConstraintKind::ArmCommand => &mut self.arm_command,
            ConstraintKind::ArmActionRate => &mut self.arm_action_rate,
            ConstraintKind::JointPosition => &mut self.joint_position,
            ConstraintKind::JointVelocity => &mut self.joint_velocity,
            ConstraintKind::JointTorque => &mut self.joint_torque,
            ConstraintKind::LegTorque => &mut self.leg_torque,
            ConstraintKind::Collision => &mut self.collision,
            ConstraintKind::ObjectBalance => &mut self.object_balance,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for kind in ConstraintKind::ALL {
            let s = self.spec(kind);
            for p in [s.p_max_initial, s.p_max_final] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!(
                        "constraints.{}: p_max {p} outside [0, 1]",
                        kind.name()
                    ));
                }
            }
            if !(s.scale.is_finite() && s.scale > 0.0) {
                return Err(format!(
                    "constraints.{}: scale must be positive",
                    kind.name()
                ));
            }
        }
        if !(self.balance_angle_limit_deg > 0.0 && self.balance_speed_threshold >= 0.0) {
            return Err("constraints: balance limits must be positive".into());
        }
        let g = &self.geometry;
        if g.body_half_extents.iter().any(|h| !(*h > 0.0))
            || g.leg_margin < 0.0
            || g.arm_samples < 2
        {
            return Err("constraints.geometry is invalid".into());
        }
        Ok(())
    }
}

pub const NUM_COLLISION_PAIRS: usize = 3;
pub const COLLISION_PAIRS: [&str; NUM_COLLISION_PAIRS] = ["object_body", "object_legs", "arm_body"];

/// Raw values of the implemented constraints for one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstraintValues {
    pub base_command: [f64; 6],
    pub arm_command: [f64; NUM_JOINTS],
    pub arm_action_rate: [f64; NUM_JOINTS],
    pub joint_position: [f64; NUM_JOINTS],
    pub joint_velocity: [f64; NUM_JOINTS],
    pub joint_torque: [f64; NUM_JOINTS],
    pub collision: [f64; NUM_COLLISION_PAIRS],
    pub object_balance: [f64; 1],
}

impl ConstraintValues {
    /// Values of one family; empty for the unimplemented row.
    pub fn get(&self, kind: ConstraintKind) -> &[f64] {
        match kind {
            ConstraintKind::BaseCommand => &self.base_command,
            ConstraintKind::ArmCommand => &self.arm_command,
            ConstraintKind::ArmActionRate => &self.arm_action_rate,
            ConstraintKind::JointPosition => &self.joint_position,
            ConstraintKind::JointVelocity => &self.joint_velocity,
            ConstraintKind::JointTorque => &self.joint_torque,
            ConstraintKind::LegTorque => &[],
            ConstraintKind::Collision => &self.collision,
            ConstraintKind::ObjectBalance => &self.object_balance,
        }
    }
}

/// Values, violation flags and termination probability of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    pub values: ConstraintValues,
    /// Indexed like [`ConstraintKind::IMPLEMENTED`].
    pub violated: [bool; NUM_IMPLEMENTED],
    pub delta: f64,
}

impl ConstraintReport {
    pub fn any_violated(&self) -> bool {
        self.violated.iter().any(|v| *v)
    }
}

/// Everything besides the transition that the formulas depend on.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintLimits<'a> {
    pub env: &'a EnvConfig,
    pub arm: &'a ArmConfig,
    pub dt: f64,
    pub constraints: &'a ConstraintsConfig,
}

fn range_excess(value: f64, lower: f64, upper: f64) -> f64 {
    (value - upper).max(lower - value)
}

fn rect_axes(yaw: f64) -> [Vector2<f64>; 2] {
    let (s, c) = yaw.sin_cos();
    [Vector2::new(c, s), Vector2::new(-s, c)]
}

/// Separating-axis overlap test of two oriented rectangles.
fn rects_overlap(
    c1: Vector2<f64>,
    yaw1: f64,
    h1: [f64; 2],
    c2: Vector2<f64>,
    yaw2: f64,
    h2: [f64; 2],
) -> bool {
    let a1 = rect_axes(yaw1);
    let a2 = rect_axes(yaw2);
    let d = c2 - c1;
    for axis in a1.iter().chain(a2.iter()) {
        let r1 = h1[0] * a1[0].dot(axis).abs() + h1[1] * a1[1].dot(axis).abs();
        let r2 = h2[0] * a2[0].dot(axis).abs() + h2[1] * a2[1].dot(axis).abs();
        if d.dot(axis).abs() > r1 + r2 {
            return false;
        }
    }
    true
}

fn rect_circle_overlap(
    c: Vector2<f64>,
    yaw: f64,
    h: [f64; 2],
    centre: Vector2<f64>,
    radius: f64,
) -> bool {
    let axes = rect_axes(yaw);
    let d = centre - c;
    let local = [d.dot(&axes[0]), d.dot(&axes[1])];
    let closest = [local[0].clamp(-h[0], h[0]), local[1].clamp(-h[1], h[1])];
    let gap = Vector2::new(local[0] - closest[0], local[1] - closest[1]);
    gap.norm() <= radius
}

/// Whether the object footprint overlaps a rectangle centred on the base.
fn object_overlaps_footprint(
    robot: &RobotState,
    half: [f64; 2],
    params: &ObjectParams,
    object: &ObjectState,
) -> bool {
    let c = robot.base_pose.position();
    let yaw = robot.base_pose.yaw;
    let oc = object.pose.position();
    match params.shape {
        Shape::Cuboid => {
            let he = params.half_extents();
            rects_overlap(c, yaw, half, oc, object.pose.yaw, [he.x, he.y])
        }
        Shape::Cylinder => rect_circle_overlap(c, yaw, half, oc, params.radius()),
    }
}

/// Binary collision indicators of the reduced pair set.
pub fn collision_values(
    robot: &RobotState,
    object: &ObjectState,
    params: &ObjectParams,
    geometry: &CollisionGeometry,
) -> [f64; NUM_COLLISION_PAIRS] {
    let he = geometry.body_half_extents;
    let body_bottom = robot.base_height - he[2];
    let object_top = obb_keypoints(params, object)
        .iter()
        .map(|k| k.z)
        .fold(0.0, f64::max);

    let object_body = object_top > body_bottom
        && object_overlaps_footprint(robot, [he[0], he[1]], params, object);

    let leg_half = [he[0] + geometry.leg_margin, he[1] + geometry.leg_margin];
    let object_legs = object_overlaps_footprint(robot, leg_half, params, object);

    let base = BaseFrame::of(robot);
    let pts = arm_points(&robot.placement(), &robot.q_arm);
    let segments = [
        (pts.elbow, pts.wrist),
        (pts.wrist, pts.flange),
        (pts.flange, pts.ee),
    ];
    let n = geometry.arm_samples;
    let inside = |p: &Vector3<f64>| {
        let b = base.point_to_base(p);
        b.x.abs() < he[0] && b.y.abs() < he[1] && b.z.abs() < he[2]
    };
    let arm_body = segments.iter().any(|(a, b)| {
        (0..n).any(|i| {
            let t = i as f64 / (n - 1) as f64;
            inside(&(a + (b - a) * t))
        })
    });
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    [flag(object_body), flag(object_legs), flag(arm_body)]
}

/// Evaluates every implemented constraint formula on one transition.
pub fn constraint_values(
    tr: &Transition,
    spec: &EpisodeSpec,
    limits: &ConstraintLimits,
) -> ConstraintValues {
    let env = limits.env;
    let arm = limits.arm;
    let cmd = &tr.commands;
    let robot = &tr.robot;
    let c = limits.constraints;

    let base_command = std::array::from_fn(|i| {
        range_excess(
            cmd.base_cmd[i],
            env.base_cmd_lower[i],
            env.base_cmd_upper[i],
        )
    });
    let arm_command =
        std::array::from_fn(|i| range_excess(cmd.q_cmd[i], arm.q_lower[i], arm.q_upper[i]));
    let arm_action_rate = std::array::from_fn(|i| {
        (cmd.arm_delta[i] - tr.prev_arm_delta[i]).abs() / limits.dt - arm.qd_limit
    });
    let joint_position =
        std::array::from_fn(|i| range_excess(robot.q_arm[i], arm.q_lower[i], arm.q_upper[i]));
    let joint_velocity = std::array::from_fn(|i| robot.qd_arm[i].abs() - arm.qd_limit);
    let joint_torque = std::array::from_fn(|i| robot.tau_arm[i].abs() - arm.torque_limit);
    let collision = collision_values(robot, &tr.object, &spec.object_params, &c.geometry);
    let balance = if robot.base_velocity_world().norm() > c.balance_speed_threshold {
        tr.object.tilt.angle.abs() - c.balance_angle_limit_deg.to_radians()
    } else {
        0.0
    };
    ConstraintValues {
        base_command,
        arm_command,
        arm_action_rate,
        joint_position,
        joint_velocity,
        joint_torque,
        collision,
        object_balance: [balance],
    }
}

/// Termination probability of a set of raw values at a learning iteration.
pub fn cat_termination(values: &ConstraintValues, cfg: &ConstraintsConfig, iteration: u64) -> f64 {
    let mut delta: f64 = 0.0;
    for kind in ConstraintKind::IMPLEMENTED {
        let spec = cfg.spec(kind);
        for &v in values.get(kind) {
            delta = delta.max(spec.probability(v, iteration));
        }
    }
    delta.clamp(0.0, 1.0)
}

/// Values, flags and δ_t of one transition.
pub fn evaluate_constraints(
    tr: &Transition,
    spec: &EpisodeSpec,
    limits: &ConstraintLimits,
    iteration: u64,
) -> ConstraintReport {
    let values = constraint_values(tr, spec, limits);
    let violated = ConstraintKind::IMPLEMENTED.map(|k| values.get(k).iter().any(|v| *v > 0.0));
    ConstraintReport {
        values,
        violated,
        delta: cat_termination(&values, limits.constraints, iteration),
    }
}

/// Per-episode count of steps with a violated constraint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ViolationCounter {
    pub steps: u64,
    pub violated: [u64; NUM_IMPLEMENTED],
}

impl ViolationCounter {
    pub fn record(&mut self, report: &ConstraintReport) {
        self.steps += 1;
        for (n, v) in self.violated.iter_mut().zip(report.violated) {
            *n += v as u64;
        }
    }

    /// Percentage of steps each constraint was violated.
    pub fn percentages(&self) -> [f64; NUM_IMPLEMENTED] {
        if self.steps == 0 {
            return [0.0; NUM_IMPLEMENTED];
        }
        self.violated.map(|n| 100.0 * n as f64 / self.steps as f64)
    }
}

/// Mean over episodes of the per-episode violated-time percentages.
pub fn violation_time_accumulate(episodes: &[ViolationCounter]) -> [f64; NUM_IMPLEMENTED] {
    let mut out = [0.0; NUM_IMPLEMENTED];
    if episodes.is_empty() {
        return out;
    }
    for e in episodes {
        for (o, p) in out.iter_mut().zip(e.percentages()) {
            *o += p;
        }
    }
    out.map(|s| s / episodes.len() as f64)
}

/// Violation-time table as a one-row CSV with a column per implemented
/// constraint.
pub fn violation_table_csv(percentages: &[f64; NUM_IMPLEMENTED]) -> String {
    let header: Vec<&str> = ConstraintKind::IMPLEMENTED
        .iter()
        .map(|k| k.name())
        .collect();
    let row: Vec<String> = percentages.iter().map(|p| format!("{p:.6}")).collect();
    format!("{}\n{}\n", header.join(","), row.join(","))
}
