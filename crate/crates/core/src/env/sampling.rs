//! Episode resets and domain randomisation.

use nalgebra::Vector3;
use rand::Rng;
use std::f64::consts::PI;

use super::config::{EnvConfig, ReachTarget};
use crate::physics::{
    surface_sample, ObjectParams, ObjectState, PlanarPose, RobotState, Shape, WorldConfig,
    NUM_JOINTS,
};

/// Everything fixed for the duration of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSpec {
    pub object_params: ObjectParams,
    pub goal_pose: PlanarPose,
    /// Reach target in object body coordinates.
    pub reach_target_obj: Vector3<f64>,
    pub initial_robot: RobotState,
    pub initial_object: ObjectState,
    pub episode_step_limit: usize,
    /// Base tracking time constant after the payload perturbation.
    pub base_time_constant: f64,
    pub base_mass_delta: f64,
}

/// Randomised robot-side properties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotPerturbation {
    pub base_mass_delta: f64,
    pub base_time_constant: f64,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, range: [f64; 2]) -> f64 {
    range[0] + (range[1] - range[0]) * rng.random::<f64>()
}

fn uniform_yaw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    uniform(rng, [-PI, PI])
}

/// Radius drawn uniformly over the area of the annulus `[r0, r1]`.
pub fn annulus_radius<R: Rng + ?Sized>(rng: &mut R, r0: f64, r1: f64) -> f64 {
    let u: f64 = rng.random();
    (r0 * r0 + u * (r1 * r1 - r0 * r0)).sqrt()
}

/// Draws object parameters and robot payload perturbation.
pub fn randomize_domain<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &EnvConfig,
    world: &WorldConfig,
) -> (ObjectParams, RobotPerturbation) {
    let r = &cfg.randomization;
    let shape = if rng.random::<f64>() < r.cylinder_probability {
        Shape::Cylinder
    } else {
        Shape::Cuboid
    };
    let dx = uniform(rng, r.dim_x);
    let dy = uniform(rng, r.dim_y);
    let dz = uniform(rng, r.dim_z);
    let dims = match shape {
        Shape::Cuboid => Vector3::new(dx, dy, dz),
        Shape::Cylinder => Vector3::new(dx, dx, dz),
    };
    let mass = uniform(rng, r.mass);
    let com_offset = Vector3::new(
        uniform(rng, r.com_x) * 0.5 * dims.x,
        uniform(rng, r.com_y) * 0.5 * dims.y,
        uniform(rng, r.com_z) * 0.5 * dims.z,
    );
    let mu_ground = uniform(rng, r.mu_ground);
    let mu_contact = uniform(rng, r.mu_contact);
    let delta = uniform(rng, [-r.base_mass_delta, r.base_mass_delta]);

    let mut params = ObjectParams {
        shape,
        dims,
        mass,
        com_offset,
        mu_ground,
        mu_contact,
    };
    let o = &cfg.object_override;
    if let Some(d) = o.cuboid_dims {
        params.shape = Shape::Cuboid;
        params.dims = Vector3::from(d);
        params.com_offset = Vector3::new(
            params.com_offset.x / dims.x * d[0],
            params.com_offset.y / dims.y * d[1],
            params.com_offset.z / dims.z * d[2],
        );
    }
    if let Some(m) = o.mass {
        params.mass = m;
    }
    if o.centered_com == Some(true) {
        params.com_offset = Vector3::zeros();
    }
    if let Some(mu) = o.mu_ground {
        params.mu_ground = mu;
    }
    let perturbation = RobotPerturbation {
        base_mass_delta: delta,
        base_time_constant: world.base_time_constant * (1.0 + delta / r.base_nominal_mass),
    };
    (params, perturbation)
}

/// Samples a fresh episode: object at the origin, robot on the spawn annulus,
/// goal on the goal disc, all with uniform yaw.
pub fn sample_episode<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &EnvConfig,
    world: &WorldConfig,
) -> EpisodeSpec {
    let (object_params, perturbation) = randomize_domain(rng, cfg, world);
    let object_yaw = uniform_yaw(rng);

    let rr = annulus_radius(rng, cfg.robot_spawn_radius[0], cfg.robot_spawn_radius[1]);
    let ra = uniform_yaw(rng);
    let robot_yaw = uniform_yaw(rng);
    let q: [f64; NUM_JOINTS] = std::array::from_fn(|i| {
        world.arm.q_default[i] + uniform(rng, [-cfg.arm_reset_range, cfg.arm_reset_range])
    });
    let q = world.arm.clip(&q);
    let initial_robot = RobotState::at_rest(
        PlanarPose::new(rr * ra.cos(), rr * ra.sin(), robot_yaw),
        cfg.default_base_height,
        q,
    );

    let rg = annulus_radius(rng, 0.0, cfg.goal_radius);
    let ga = uniform_yaw(rng);
    let goal_yaw = uniform_yaw(rng);
    let goal_pose = PlanarPose::new(rg * ga.cos(), rg * ga.sin(), goal_yaw);

    let reach_target_obj = match cfg.reach_target {
        ReachTarget::Surface => surface_sample(&object_params, rng),
        ReachTarget::Centroid => Vector3::new(0.0, 0.0, 0.5 * object_params.dims.z),
    };

    EpisodeSpec {
        object_params,
        goal_pose,
        reach_target_obj,
        initial_robot,
        initial_object: ObjectState::at(PlanarPose::new(0.0, 0.0, object_yaw)),
        episode_step_limit: cfg.episode_steps,
        base_time_constant: perturbation.base_time_constant,
        base_mass_delta: perturbation.base_mass_delta,
    }
}
