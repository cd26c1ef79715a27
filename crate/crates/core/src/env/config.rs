use serde::{Deserialize, Serialize};

/// Where the EE reach target for the reaching reward is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachTarget {
    /// Uniform over the object's lateral surface.
    Surface,
    /// The object's geometric centroid.
    Centroid,
}

/// Uniform observation-noise half-widths, per actor observation group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub ee_object_position: f64,
    pub object_rotation: f64,
    pub joint_position: f64,
    pub base_linear_velocity: f64,
    pub base_angular_velocity: f64,
    pub joint_velocity: f64,
    pub projected_gravity: f64,
    pub object_goal_position: f64,
    pub goal_rotation: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            ee_object_position: 0.02,
            object_rotation: 0.01,
            joint_position: 0.01,
            base_linear_velocity: 0.01,
            base_angular_velocity: 0.20,
            joint_velocity: 0.50,
            projected_gravity: 0.05,
            object_goal_position: 0.02,
            goal_rotation: 0.01,
        }
    }
}

/// Domain-randomisation ranges, all `[low, high]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizationConfig {
    pub mass: [f64; 2],
    pub dim_x: [f64; 2],
    pub dim_y: [f64; 2],
    pub dim_z: [f64; 2],
    /// CoM offset as a fraction of each half-dimension.
    pub com_x: [f64; 2],
    pub com_y: [f64; 2],
    pub com_z: [f64; 2],
    pub mu_ground: [f64; 2],
    pub mu_contact: [f64; 2],
    pub cylinder_probability: f64,
    /// Base payload perturbation, kg (symmetric).
    pub base_mass_delta: f64,
    pub base_nominal_mass: f64,
}

impl Default for RandomizationConfig {
    fn default() -> Self {
        Self {
            mass: [1.0, 10.0],
            dim_x: [0.25, 0.75],
            dim_y: [0.25, 0.75],
            dim_z: [0.4, 1.0],
            com_x: [-0.25, 0.25],
            com_y: [-0.25, 0.25],
            com_z: [-0.6, 0.25],
            mu_ground: [0.4, 1.25],
            mu_contact: [0.5, 0.5],
            cylinder_probability: 0.5,
            base_mass_delta: 5.0,
            base_nominal_mass: 50.0,
        }
    }
}

/// Optional fixed object properties, used by evaluation sweeps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectOverride {
    pub cuboid_dims: Option<[f64; 3]>,
    pub mass: Option<f64>,
    pub centered_com: Option<bool>,
    pub mu_ground: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub episode_steps: usize,
    pub robot_spawn_radius: [f64; 2],
    pub goal_radius: f64,
    pub success_distance: f64,
    pub success_yaw_deg: f64,
    pub default_base_height: f64,
    pub action_scale_base: [f64; 6],
    pub action_scale_arm: f64,
    pub base_cmd_lower: [f64; 6],
    pub base_cmd_upper: [f64; 6],
    /// Uniform half-width of the arm reset perturbation around the default.
    pub arm_reset_range: f64,
    pub reach_target: ReachTarget,
    /// Interval between base pushes, seconds.
    pub push_interval: [f64; 2],
    /// Magnitude of a base push, m/s.
    pub push_speed: [f64; 2],
    pub observation_noise: bool,
    pub noise: NoiseConfig,
    pub randomization: RandomizationConfig,
    pub object_override: ObjectOverride,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            episode_steps: 1000,
            robot_spawn_radius: [1.2, 2.5],
            goal_radius: 2.0,
            success_distance: 0.10,
            success_yaw_deg: 10.0,
            default_base_height: 0.5,
            action_scale_base: [0.7, 0.7, 0.8, 0.3, 0.3, 0.15],
            action_scale_arm: 0.5,
            base_cmd_lower: [-0.7, -0.7, -0.8, -0.3, -0.3, 0.35],
            base_cmd_upper: [0.7, 0.7, 0.8, 0.3, 0.3, 0.65],
            arm_reset_range: 0.3,
            reach_target: ReachTarget::Surface,
            push_interval: [7.0, 10.0],
            push_speed: [0.3, 0.6],
            observation_noise: true,
            noise: NoiseConfig::default(),
            randomization: RandomizationConfig::default(),
            object_override: ObjectOverride::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), String> {
        let ordered = |name: &str, r: [f64; 2]| {
            if r[0] <= r[1] && r.iter().all(|v| v.is_finite()) {
                Ok(())
            } else {
                Err(format!(
                    "env.{name} must be an ordered finite [low, high] pair"
                ))
            }
        };
        ordered("robot_spawn_radius", self.robot_spawn_radius)?;
        ordered("push_interval", self.push_interval)?;
        ordered("push_speed", self.push_speed)?;
        let r = &self.randomization;
        for (name, range) in [
            ("mass", r.mass),
            ("dim_x", r.dim_x),
            ("dim_y", r.dim_y),
            ("dim_z", r.dim_z),
            ("com_x", r.com_x),
            ("com_y", r.com_y),
            ("com_z", r.com_z),
            ("mu_ground", r.mu_ground),
            ("mu_contact", r.mu_contact),
        ] {
            ordered(&format!("randomization.{name}"), range)?;
        }
        if r.mass[0] <= 0.0 || r.dim_x[0] <= 0.0 || r.dim_y[0] <= 0.0 || r.dim_z[0] <= 0.0 {
            return Err("env.randomization: masses and dimensions must be positive".into());
        }
        if !(0.0..=1.0).contains(&r.cylinder_probability) {
            return Err("env.randomization.cylinder_probability must lie in [0, 1]".into());
        }
        if self.episode_steps == 0 {
            return Err("env.episode_steps must be positive".into());
        }
        if self.robot_spawn_radius[0] < 0.0 || self.goal_radius < 0.0 {
            return Err("env: spawn radii must be non-negative".into());
        }
        for i in 0..6 {
            if self.base_cmd_lower[i] > self.base_cmd_upper[i] {
                return Err(format!(
                    "env.base_cmd_lower[{i}] exceeds base_cmd_upper[{i}]"
                ));
            }
        }
        Ok(())
    }
}
