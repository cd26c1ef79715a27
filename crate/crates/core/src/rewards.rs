//! Task reward terms.
//!
//! * `r1`: keypoint tracking, `exp(-‖K_g − K_o‖ / σ3²)` over the stacked
//!   24-vector of bounding-box vertices.
//! * `r2`: EE reaching, `exp(-‖p_e − p_r‖ / σ1²)`.
//! * `r3`: object heading, `exp((v̂_o · p̂_og − 1) / σ2²)`.
//! * `r4`: action smoothness, one exponential each for base and arm deltas.
//!
//! Once the goal has been reached `r1` is replaced by the success value,
//! `r2` holds its previous value and `r3` is zero.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::env::{obs::goal_state, EpisodeSpec, Transition};
use crate::physics::keypoint_vector;

/// Below this object speed the heading direction is undefined.
pub const MIN_OBJECT_SPEED: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// `(w1, w2, w3, w4)`.
    pub weights: [f64; 4],
    /// σ1², reach distance scale.
    pub reach_sigma_sq: f64,
    /// σ2², heading alignment scale.
    pub heading_sigma_sq: f64,
    /// σ3², keypoint distance scale.
    pub keypoint_sigma_sq: f64,
    /// σ4b², base action-rate scale.
    pub base_rate_sigma_sq: f64,
    /// σ4a², arm action-rate scale.
    pub arm_rate_sigma_sq: f64,
    pub success_task_reward: f64,
    /// `w2` is divided by this factor after `reach_downscale_iteration`.
    pub reach_downscale: f64,
    pub reach_downscale_iteration: u64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            weights: [2.5, 1.25, 0.156, 0.3],
            reach_sigma_sq: 0.16,
            heading_sigma_sq: 0.5,
            keypoint_sigma_sq: 1.44,
            base_rate_sigma_sq: 0.5,
            arm_rate_sigma_sq: 0.5,
            success_task_reward: 2.0,
            reach_downscale: 4.0,
            reach_downscale_iteration: 1500,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("reach_sigma_sq", self.reach_sigma_sq),
            ("heading_sigma_sq", self.heading_sigma_sq),
            ("keypoint_sigma_sq", self.keypoint_sigma_sq),
            ("base_rate_sigma_sq", self.base_rate_sigma_sq),
            ("arm_rate_sigma_sq", self.arm_rate_sigma_sq),
            ("reach_downscale", self.reach_downscale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("reward.{name} must be positive, got {v}"));
            }
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err("reward.weights must be finite".into());
        }
        Ok(())
    }

    /// Effective reach weight at a learning iteration.
    pub fn reach_weight(&self, iteration: u64) -> f64 {
        if iteration > self.reach_downscale_iteration {
            self.weights[1] / self.reach_downscale
        } else {
            self.weights[1]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardTerms {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
}

impl RewardTerms {
    pub fn as_array(&self) -> [f64; 4] {
        [self.r1, self.r2, self.r3, self.r4]
    }
}

/// Euclidean norm of the stacked keypoint difference between object and goal.
pub fn keypoint_distance(tr: &Transition, spec: &EpisodeSpec) -> f64 {
    let k_o = keypoint_vector(&spec.object_params, &tr.object);
    let k_g = keypoint_vector(&spec.object_params, &goal_state(&spec.goal_pose));
    k_o.iter()
        .zip(&k_g)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Heading term from planar object velocity and object-to-goal offset.
pub fn heading_reward(velocity: Vector2<f64>, to_goal: Vector2<f64>, sigma_sq: f64) -> f64 {
    let speed = velocity.norm();
    let dist = to_goal.norm();
    if speed < MIN_OBJECT_SPEED || dist == 0.0 {
        return (-2.0 / sigma_sq).exp();
    }
    let alignment = (velocity / speed).dot(&(to_goal / dist));
    ((alignment - 1.0) / sigma_sq).exp()
}

fn l1_delta(now: &[f64], before: &[f64]) -> f64 {
    now.iter().zip(before).map(|(a, b)| (a - b).abs()).sum()
}

pub fn reward_terms(tr: &Transition, spec: &EpisodeSpec, cfg: &RewardConfig) -> RewardTerms {
    let r4 = (-l1_delta(&tr.commands.base_delta, &tr.prev_base_delta) / cfg.base_rate_sigma_sq)
        .exp()
        + (-l1_delta(&tr.commands.arm_delta, &tr.prev_arm_delta) / cfg.arm_rate_sigma_sq).exp();
    if tr.success_latched {
        return RewardTerms {
            r1: cfg.success_task_reward,
            r2: tr.prev_r2,
            r3: 0.0,
            r4,
        };
    }
    let r1 = (-keypoint_distance(tr, spec) / cfg.keypoint_sigma_sq).exp();
    let target = tr
        .object
        .to_world(&spec.object_params, &spec.reach_target_obj);
    let r2 = (-(tr.robot.ee_pos_world - target).norm() / cfg.reach_sigma_sq).exp();
    let to_goal = spec.goal_pose.position() - tr.object.pose.position();
    let r3 = heading_reward(tr.object.lin_vel, to_goal, cfg.heading_sigma_sq);
    RewardTerms { r1, r2, r3, r4 }
}

/// Weighted sum of the reward terms with the scheduled reach weight.
pub fn total_reward(terms: &RewardTerms, cfg: &RewardConfig, iteration: u64) -> f64 {
    let w = cfg.weights;
    w[0] * terms.r1 + cfg.reach_weight(iteration) * terms.r2 + w[2] * terms.r3 + w[3] * terms.r4
}
