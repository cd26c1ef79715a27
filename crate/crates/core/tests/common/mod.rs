//! Independent oracles shared by the integration tests and the acceptance
//! runner. Nothing here calls the formula code under test.

#![allow(dead_code)]

use catpush::env::{ActionVec, EpisodeSpec, Transition, ACTION_DIM};
use catpush::physics::{arm_points, ObjectParams, ObjectState, Shape};
use catpush::rl::gae::GaeStep;
use catpush::rl::mlp::{backward, forward, Activation, MlpSpec};
use catpush::task::{PushTask, TaskConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn norm(a: V3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn rot_z(yaw: f64, p: V3) -> V3 {
    let (s, c) = yaw.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
}

/// Rodrigues rotation of `p` about the unit axis `k` by `angle`.
fn rodrigues(k: V3, angle: f64, p: V3) -> V3 {
    let (s, c) = angle.sin_cos();
    let kxp = [
        k[1] * p[2] - k[2] * p[1],
        k[2] * p[0] - k[0] * p[2],
        k[0] * p[1] - k[1] * p[0],
    ];
    let kdp = k[0] * p[0] + k[1] * p[1] + k[2] * p[2];
    std::array::from_fn(|i| p[i] * c + kxp[i] * s + k[i] * kdp * (1.0 - c))
}

/// Body point to world: yaw about the footprint centre, then a rotation
/// about the ground support edge farthest along the tilt heading.
pub fn body_to_world(params: &ObjectParams, s: &ObjectState, p: V3) -> V3 {
    let upright = add([s.pose.x, s.pose.y, 0.0], rot_z(s.pose.yaw, p));
    let a = s.tilt.angle;
    if a == 0.0 {
        return upright;
    }
    let (uy, ux) = s.tilt.axis_yaw.sin_cos();
    let rel = s.tilt.axis_yaw - s.pose.yaw;
    let extent = match params.shape {
        Shape::Cuboid => {
            rel.cos().abs() * params.dims.x / 2.0 + rel.sin().abs() * params.dims.y / 2.0
        }
        Shape::Cylinder => params.dims.x / 2.0,
    };
    let pivot = [s.pose.x + extent * ux, s.pose.y + extent * uy, 0.0];
    add(pivot, rodrigues([-uy, ux, 0.0], a, sub(upright, pivot)))
}

pub fn keypoints(params: &ObjectParams, s: &ObjectState) -> Vec<f64> {
    let (hx, hy, dz) = (params.dims.x / 2.0, params.dims.y / 2.0, params.dims.z);
    let mut out = Vec::with_capacity(24);
    for z in [0.0, dz] {
        for y in [-hy, hy] {
            for x in [-hx, hx] {
                out.extend_from_slice(&body_to_world(params, s, [x, y, z]));
            }
        }
    }
    out
}

/// Reward terms recomputed from their definitions with default weights.
pub fn oracle_reward_terms(
    tr: &Transition,
    spec: &EpisodeSpec,
    cfg: &catpush::rewards::RewardConfig,
) -> [f64; 4] {
    let l1 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    let r4 = (-l1(&tr.commands.base_delta, &tr.prev_base_delta) / cfg.base_rate_sigma_sq).exp()
        + (-l1(&tr.commands.arm_delta, &tr.prev_arm_delta) / cfg.arm_rate_sigma_sq).exp();
    if tr.success_latched {
        return [cfg.success_task_reward, tr.prev_r2, 0.0, r4];
    }
    let p = &spec.object_params;
    let goal = ObjectState::at(spec.goal_pose);
    let ko = keypoints(p, &tr.object);
    let kg = keypoints(p, &goal);
    let dk = ko
        .iter()
        .zip(&kg)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let r1 = (-dk / cfg.keypoint_sigma_sq).exp();
    let t = spec.reach_target_obj;
    let target = body_to_world(p, &tr.object, [t.x, t.y, t.z]);
    let ee = tr.robot.ee_pos_world;
    let r2 = (-norm(sub([ee.x, ee.y, ee.z], target)) / cfg.reach_sigma_sq).exp();
    let (vx, vy) = (tr.object.lin_vel.x, tr.object.lin_vel.y);
    let (gx, gy) = (
        spec.goal_pose.x - tr.object.pose.x,
        spec.goal_pose.y - tr.object.pose.y,
    );
    let speed = vx.hypot(vy);
    let dist = gx.hypot(gy);
    let r3 = if speed < 1e-6 || dist == 0.0 {
        (-2.0 / cfg.heading_sigma_sq).exp()
    } else {
        let cos = (vx * gx + vy * gy) / (speed * dist);
        ((cos - 1.0) / cfg.heading_sigma_sq).exp()
    };
    [r1, r2, r3, r4]
}

pub fn oracle_total_reward(
    terms: &[f64; 4],
    cfg: &catpush::rewards::RewardConfig,
    iteration: u64,
) -> f64 {
    let w2 = if iteration > cfg.reach_downscale_iteration {
        cfg.weights[1] / cfg.reach_downscale
    } else {
        cfg.weights[1]
    };
    cfg.weights[0] * terms[0]
        + w2 * terms[1]
        + cfg.weights[2] * terms[2]
        + cfg.weights[3] * terms[3]
}

/// Corners of an oriented rectangle.
fn rect_corners(cx: f64, cy: f64, yaw: f64, hx: f64, hy: f64) -> [[f64; 2]; 4] {
    [[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]].map(|[x, y]| {
        let p = rot_z(yaw, [x, y, 0.0]);
        [cx + p[0], cy + p[1]]
    })
}

fn point_in_rect(p: [f64; 2], cx: f64, cy: f64, yaw: f64, hx: f64, hy: f64) -> bool {
    let l = rot_z(-yaw, [p[0] - cx, p[1] - cy, 0.0]);
    l[0].abs() <= hx && l[1].abs() <= hy
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let (o1, o2, o3, o4) = (
        orient(a, b, c),
        orient(a, b, d),
        orient(c, d, a),
        orient(c, d, b),
    );
    o1 * o2 <= 0.0 && o3 * o4 <= 0.0
}

/// Rectangle overlap by corner containment or edge crossing.
fn rects_intersect(r1: (f64, f64, f64, f64, f64), r2: (f64, f64, f64, f64, f64)) -> bool {
    let c1 = rect_corners(r1.0, r1.1, r1.2, r1.3, r1.4);
    let c2 = rect_corners(r2.0, r2.1, r2.2, r2.3, r2.4);
    if c1
        .iter()
        .any(|p| point_in_rect(*p, r2.0, r2.1, r2.2, r2.3, r2.4))
        || c2
            .iter()
            .any(|p| point_in_rect(*p, r1.0, r1.1, r1.2, r1.3, r1.4))
    {
        return true;
    }
    (0..4).any(|i| (0..4).any(|j| segments_cross(c1[i], c1[(i + 1) % 4], c2[j], c2[(j + 1) % 4])))
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1]))
        .clamp(0.0, 1.0);
    (p[0] - a[0] - t * ab[0]).hypot(p[1] - a[1] - t * ab[1])
}

fn footprint_hit(tr: &Transition, p: &ObjectParams, hx: f64, hy: f64) -> bool {
    let r = &tr.robot;
    let body = (r.base_pose.x, r.base_pose.y, r.base_pose.yaw, hx, hy);
    let o = &tr.object.pose;
    match p.shape {
        Shape::Cuboid => rects_intersect(body, (o.x, o.y, o.yaw, p.dims.x / 2.0, p.dims.y / 2.0)),
        Shape::Cylinder => {
            let c = [o.x, o.y];
            let rad = p.dims.x / 2.0;
            if point_in_rect(c, body.0, body.1, body.2, hx, hy) {
                return true;
            }
            let k = rect_corners(body.0, body.1, body.2, hx, hy);
            (0..4).any(|i| point_segment_distance(c, k[i], k[(i + 1) % 4]) <= rad)
        }
    }
}

/// Base rotation `Rz(yaw) Ry(pitch) Rx(roll)` applied transposed.
pub fn world_to_base(r: &catpush::physics::RobotState, p: V3) -> V3 {
    let d = sub(p, [r.base_pose.x, r.base_pose.y, r.base_height]);
    let d = rot_z(-r.base_pose.yaw, d);
    let (sp, cp) = r.base_pitch.sin_cos();
    let d = [cp * d[0] - sp * d[2], d[1], sp * d[0] + cp * d[2]];
    let (sr, cr) = r.base_roll.sin_cos();
    [d[0], cr * d[1] + sr * d[2], -sr * d[1] + cr * d[2]]
}

/// Every implemented constraint value, flattened in table order.
pub fn oracle_constraint_values(tr: &Transition, spec: &EpisodeSpec, cfg: &TaskConfig) -> Vec<f64> {
    let env = &cfg.env;
    let arm = &cfg.world.arm;
    let c = &cfg.constraints;
    // Negative inside the range: minus the distance to the nearer bound.
    let excess = |v: f64, lo: f64, hi: f64| -f64::min(v - lo, hi - v);
    let mut out = Vec::new();
    for i in 0..6 {
        out.push(excess(
            tr.commands.base_cmd[i],
            env.base_cmd_lower[i],
            env.base_cmd_upper[i],
        ));
    }
    for i in 0..5 {
        out.push(excess(tr.commands.q_cmd[i], arm.q_lower[i], arm.q_upper[i]));
    }
    for i in 0..5 {
        out.push(
            (tr.commands.arm_delta[i] - tr.prev_arm_delta[i]).abs() / cfg.world.dt - arm.qd_limit,
        );
    }
    for i in 0..5 {
        out.push(excess(tr.robot.q_arm[i], arm.q_lower[i], arm.q_upper[i]));
    }
    for i in 0..5 {
        out.push(tr.robot.qd_arm[i].abs() - arm.qd_limit);
    }
    for i in 0..5 {
        out.push(tr.robot.tau_arm[i].abs() - arm.torque_limit);
    }
    let p = &spec.object_params;
    let he = c.geometry.body_half_extents;
    let top = keypoints(p, &tr.object)
        .chunks(3)
        .map(|k| k[2])
        .fold(f64::MIN, f64::max);
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    out.push(flag(
        top > tr.robot.base_height - he[2] && footprint_hit(tr, p, he[0], he[1]),
    ));
    let m = c.geometry.leg_margin;
    out.push(flag(footprint_hit(tr, p, he[0] + m, he[1] + m)));
    let pts = arm_points(&tr.robot.placement(), &tr.robot.q_arm);
    let chain = [pts.elbow, pts.wrist, pts.flange, pts.ee];
    let n = c.geometry.arm_samples;
    let mut arm_hit = false;
    for w in chain.windows(2) {
        for i in 0..n {
            let t = i as f64 / (n - 1) as f64;
            let q = w[0] + (w[1] - w[0]) * t;
            let b = world_to_base(&tr.robot, [q.x, q.y, q.z]);
            arm_hit |= b[0].abs() < he[0] && b[1].abs() < he[1] && b[2].abs() < he[2];
        }
    }
    out.push(flag(arm_hit));
    let v = tr.robot.base_velocity_world();
    let balance = if norm([v.x, v.y, v.z]) > c.balance_speed_threshold {
        tr.object.tilt.angle.abs() - c.balance_angle_limit_deg * std::f64::consts::PI / 180.0
    } else {
        0.0
    };
    out.push(balance);
    out
}

/// Row sizes of the flattened constraint vector.
pub const CONSTRAINT_ROWS: [usize; 8] = [6, 5, 5, 5, 5, 5, 3, 1];

/// Termination probability from the curriculum definition.
pub fn oracle_delta(values: &[f64], cfg: &TaskConfig, iteration: u64) -> f64 {
    let c = &cfg.constraints;
    let rows = [
        &c.base_command,
        &c.arm_command,
        &c.arm_action_rate,
        &c.joint_position,
        &c.joint_velocity,
        &c.joint_torque,
        &c.collision,
        &c.object_balance,
    ];
    let mut delta: f64 = 0.0;
    let mut k = 0;
    for (row, n) in rows.iter().zip(CONSTRAINT_ROWS) {
        let p_max = match row.curriculum_end_iteration {
            None => row.p_max_initial,
            Some(end) => {
                let f = (iteration as f64 / end as f64).min(1.0);
                row.p_max_initial + f * (row.p_max_final - row.p_max_initial)
            }
        };
        for _ in 0..n {
            let v = values[k];
            k += 1;
            if row.enabled && v > 0.0 {
                delta = delta.max(p_max * (v / row.scale).min(1.0));
            }
        }
    }
    delta
}

/// Transitions from random rollouts, then perturbed to cover success mode,
/// tilts, fast joints, stationary objects and robot-object proximity.
pub fn random_transitions(n: usize, seed: u64) -> Vec<(EpisodeSpec, Transition, u64)> {
    let cfg = TaskConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut episode = 0;
    while out.len() < n {
        let (mut task, _, _) = PushTask::reset(catpush::rng::stream(seed, 99, episode), &cfg);
        episode += 1;
        for _ in 0..50 {
            let scale = [0.2, 1.0, 3.0][rng.random_range(0..3)];
            let a: [f64; ACTION_DIM] =
                std::array::from_fn(|_| scale * (2.0 * rng.random::<f64>() - 1.0));
            let Ok(step) = task.step(&ActionVec(a), &cfg, 0) else {
                break;
            };
            let mut tr = step.transition;
            if rng.random::<f64>() < 0.3 {
                tr.success_latched = true;
                tr.prev_r2 = rng.random();
            }
            if rng.random::<f64>() < 0.5 {
                tr.object.tilt.angle = 0.6 * rng.random::<f64>();
                tr.object.tilt.axis_yaw = std::f64::consts::TAU * rng.random::<f64>();
                tr.robot.base_lin_vel.x = rng.random_range(-0.5..0.5);
            }
            if rng.random::<f64>() < 0.2 {
                tr.object.lin_vel.x = 0.0;
                tr.object.lin_vel.y = 0.0;
            }
            if rng.random::<f64>() < 0.3 {
                for i in 0..5 {
                    tr.robot.qd_arm[i] = rng.random_range(-4.0..4.0);
                    tr.robot.tau_arm[i] = rng.random_range(-50.0..50.0);
                    let (lo, hi) = (cfg.world.arm.q_lower[i], cfg.world.arm.q_upper[i]);
                    tr.robot.q_arm[i] = rng.random_range(lo - 0.3..hi + 0.3);
                }
            }
            if rng.random::<f64>() < 0.3 {
                tr.robot.base_pose.x = tr.object.pose.x + rng.random_range(-0.8..0.8);
                tr.robot.base_pose.y = tr.object.pose.y + rng.random_range(-0.8..0.8);
                tr.robot.base_pose.yaw = rng.random_range(-3.0..3.0);
            }
            let iteration = rng.random_range(0..15_000);
            out.push((task.spec.clone(), tr, iteration));
            if out.len() == n || step.termination.is_done() {
                break;
            }
        }
    }
    out
}

/// Maximum errors `(reward terms and total, constraint values, δ)` of the
/// library against the oracles.
pub fn formula_fidelity(n: usize, seed: u64) -> (f64, f64, f64) {
    use catpush::constraints::{evaluate_constraints, ConstraintKind};
    use catpush::rewards::{reward_terms, total_reward};
    let cfg = TaskConfig::default();
    let (mut er, mut ec, mut ed) = (0.0f64, 0.0f64, 0.0f64);
    for (spec, tr, it) in random_transitions(n, seed) {
        let lib = reward_terms(&tr, &spec, &cfg.reward);
        let ora = oracle_reward_terms(&tr, &spec, &cfg.reward);
        for (a, b) in lib.as_array().iter().zip(ora) {
            er = er.max((a - b).abs());
        }
        er = er.max(
            (total_reward(&lib, &cfg.reward, it) - oracle_total_reward(&ora, &cfg.reward, it))
                .abs(),
        );
        let report = evaluate_constraints(&tr, &spec, &cfg.limits(), it);
        let lib_values: Vec<f64> = ConstraintKind::IMPLEMENTED
            .iter()
            .flat_map(|k| report.values.get(*k).to_vec())
            .collect();
        let ora_values = oracle_constraint_values(&tr, &spec, &cfg);
        assert_eq!(lib_values.len(), ora_values.len());
        for (a, b) in lib_values.iter().zip(&ora_values) {
            ec = ec.max((a - b).abs());
        }
        ed = ed.max((report.delta - oracle_delta(&ora_values, &cfg, it)).abs());
    }
    (er, ec, ed)
}

/// Maximum relative error between backpropagated and central-difference
/// gradients of `Σ w ⊙ mlp(x)` over every parameter and input coordinate.
pub fn mlp_gradient_error(spec: &MlpSpec, batch: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<f64> = (0..spec.num_params())
        .map(|_| rng.random_range(-0.3..0.3))
        .collect();
    let input: Vec<f64> = (0..batch * spec.input)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let w: Vec<f64> = (0..batch * spec.output)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let loss = |p: &[f64], x: &[f64]| -> f64 {
        let out = forward(spec, p, x, batch);
        out.output().iter().zip(&w).map(|(a, b)| a * b).sum()
    };
    let cache = forward(spec, &params, &input, batch);
    let mut grad = vec![0.0; params.len()];
    let input_grad = backward(spec, &params, &cache, &w, &mut grad, true).expect("input gradient");
    let h = 1e-5;
    let rel = |a: f64, n: f64| (a - n).abs() / (a.abs().max(n.abs())).max(1e-6);
    let mut worst = 0.0f64;
    let mut p = params.clone();
    for i in 0..params.len() {
        p[i] = params[i] + h;
        let up = loss(&p, &input);
        p[i] = params[i] - h;
        let down = loss(&p, &input);
        p[i] = params[i];
        worst = worst.max(rel(grad[i], (up - down) / (2.0 * h)));
    }
    let mut x = input.clone();
    for i in 0..input.len() {
        x[i] = input[i] + h;
        let up = loss(&params, &x);
        x[i] = input[i] - h;
        let down = loss(&params, &x);
        x[i] = input[i];
        worst = worst.max(rel(input_grad[i], (up - down) / (2.0 * h)));
    }
    worst
}

pub fn actor_like_spec(activation: Activation) -> MlpSpec {
    let mut s = MlpSpec::new(54, &[64, 64], 22);
    s.activation = activation;
    s
}

/// Advantages by explicit summation of discounted, damped TD residuals.
pub fn gae_brute_force(steps: &[GaeStep], gamma: f64, lambda: f64) -> Vec<f64> {
    let n = steps.len();
    let td: Vec<f64> = steps
        .iter()
        .map(|s| s.reward + gamma * (1.0 - s.delta) * s.next_value - s.value)
        .collect();
    (0..n)
        .map(|t| {
            let mut sum = 0.0;
            for k in t..n {
                let mut weight = 1.0;
                for s in &steps[t..k] {
                    let cont = if s.done { 0.0 } else { 1.0 - s.delta };
                    weight *= gamma * lambda * cont;
                }
                sum += weight * td[k];
            }
            sum
        })
        .collect()
}

pub fn random_gae_steps(n: usize, rng: &mut ChaCha8Rng) -> Vec<GaeStep> {
    (0..n)
        .map(|_| GaeStep {
            reward: rng.random_range(-1.0..1.0),
            value: rng.random_range(-2.0..2.0),
            next_value: rng.random_range(-2.0..2.0),
            done: rng.random::<f64>() < 0.1,
            delta: if rng.random::<f64>() < 0.3 {
                rng.random::<f64>()
            } else {
                0.0
            },
        })
        .collect()
}

/// Worst GAE error against [`gae_brute_force`] and, for undamped chained
/// sequences with λ = 1, against plain discounted returns.
pub fn gae_error(trials: usize, seed: u64) -> f64 {
    use catpush::rl::gae::gae;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let steps = random_gae_steps(50, &mut rng);
        let (gamma, lambda) = (rng.random_range(0.9..1.0), rng.random_range(0.8..1.0));
        let mut adv = vec![0.0; 50];
        let mut ret = vec![0.0; 50];
        gae(&steps, gamma, lambda, &mut adv, &mut ret);
        for (a, b) in adv.iter().zip(gae_brute_force(&steps, gamma, lambda)) {
            worst = worst.max((a - b).abs());
        }

        let values: Vec<f64> = (0..51).map(|_| rng.random_range(-2.0..2.0)).collect();
        let chained: Vec<GaeStep> = (0..50)
            .map(|t| GaeStep {
                reward: rng.random_range(-1.0..1.0),
                value: values[t],
                next_value: values[t + 1],
                done: false,
                delta: 0.0,
            })
            .collect();
        gae(&chained, gamma, 1.0, &mut adv, &mut ret);
        for t in 0..50 {
            let mut g = gamma.powi((50 - t) as i32) * values[50];
            for k in t..50 {
                g += gamma.powi((k - t) as i32) * chained[k].reward;
            }
            worst = worst.max((ret[t] - g).abs());
        }
    }
    worst
}

/// Mean and population standard deviation after normalisation.
pub fn normalization_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for n in [2usize, 17, 1000, 12288] {
        let mut a: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..80.0)).collect();
        catpush::rl::gae::normalize(&mut a);
        let mean = a.iter().sum::<f64>() / n as f64;
        let var = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        worst = worst.max(mean.abs()).max((var.sqrt() - 1.0).abs());
    }
    worst
}

/// Pushes through the CoM ground projection with a force beyond the friction
/// limit. Returns `(max |ω|, max sin angle between v and F, cases)`.
pub fn zero_moment_push(n: usize, seed: u64) -> (f64, f64, usize) {
    use catpush::physics::{limit_surface_twist, resolve_contact, PlanarPose, WorldConfig};
    use nalgebra::Vector3;
    let cfg = WorldConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut w, mut s, mut cases) = (0.0f64, 0.0f64, 0);
    for i in 0..n {
        let mass = rng.random_range(1.0..10.0);
        let mut p = if i % 2 == 0 {
            let mut p = ObjectParams::cuboid(
                [
                    rng.random_range(0.25..0.75),
                    rng.random_range(0.25..0.75),
                    rng.random_range(0.4..1.0),
                ],
                mass,
            );
            p.com_offset = Vector3::new(
                rng.random_range(-0.25..0.25) * p.dims.x / 2.0,
                rng.random_range(-0.25..0.25) * p.dims.y / 2.0,
                rng.random_range(-0.6..0.25) * p.dims.z / 2.0,
            );
            p
        } else {
            ObjectParams::cylinder(
                rng.random_range(0.25..0.75),
                rng.random_range(0.4..1.0),
                mass,
            )
        };
        p.mu_ground = rng.random_range(0.4..1.25);
        let state = ObjectState::at(PlanarPose::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-3.1..3.1),
        ));
        let f_max = p.mu_ground * p.mass * cfg.gravity;
        let force = rng.random_range(1.05..3.0) * f_max;
        if force >= cfg.contact_force_cap {
            continue;
        }
        let pen = force / cfg.contact_stiffness;
        let h = rng.random_range(0.05..0.95) * p.dims.z;
        // Body-frame approach direction and entry point on the line through the CoM.
        let (entry, inward) = match p.shape {
            Shape::Cuboid => {
                let (sign, axis) =
                    [(1.0, 0), (-1.0, 0), (1.0, 1), (-1.0, 1)][rng.random_range(0..4)];
                let mut e = [p.com_offset.x, p.com_offset.y];
                e[axis] = sign * p.dims[axis] / 2.0 - sign * pen;
                let mut d = [0.0, 0.0];
                d[axis] = -sign;
                (e, d)
            }
            Shape::Cylinder => {
                let a: f64 = rng.random_range(-3.1..3.1);
                let r = p.dims.x / 2.0 - pen;
                ([r * a.cos(), r * a.sin()], [-a.cos(), -a.sin()])
            }
        };
        let ee = body_to_world(&p, &state, [entry[0], entry[1], h]);
        let dir = rot_z(state.pose.yaw, [inward[0], inward[1], 0.0]);
        let vel = Vector3::new(0.2 * dir[0], 0.2 * dir[1], 0.0);
        let contact = resolve_contact(&Vector3::from(ee), &vel, &p, &state);
        assert!(contact.in_contact);
        let t = limit_surface_twist(&contact, &p, &state, &cfg);
        let v = [t.vx, t.vy];
        let speed = v[0].hypot(v[1]);
        assert!(speed > 0.0, "push beyond the friction limit must slide");
        w = w.max(t.omega.abs());
        s = s.max(((v[0] * dir[1] - v[1] * dir[0]) / speed).abs());
        cases += 1;
    }
    (w, s, cases)
}

/// Outcome of the tip-versus-slide grid.
#[derive(Debug, Clone, Copy, Default)]
pub struct TipGridResult {
    pub cases: usize,
    pub tipping_cases: usize,
    /// Cases whose tip/no-tip outcome disagrees with `h_c > b / μ`.
    pub mismatches: usize,
    /// Largest gap between the first tilting step and the analytic crossing
    /// time, in control steps.
    pub max_timing_error_steps: f64,
}

/// Ramps a centred push on a unit-mass block for every `(μ, b, h_c)` in an
/// `n³` grid and compares tilt onset with moment balance:
/// tipping starts once `F h_c > m g b`, which friction permits iff `h_c > b / μ`.
pub fn tip_vs_slide_grid(n: usize) -> TipGridResult {
    use catpush::physics::{resolve_contact, tilt_update, WorldConfig};
    use nalgebra::Vector3;
    let cfg = WorldConfig::default();
    let lin = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let mut out = TipGridResult::default();
    // Penetration growth per step; the force grows by `k dpen` each step.
    let dpen = 1e-5;
    let df = cfg.contact_stiffness * dpen;
    for i in 0..n {
        let mu = lin(0.4, 1.25, i);
        for j in 0..n {
            let b = lin(0.0625, 0.3725, j);
            for k in 0..n {
                let h_c = lin(0.0413, 0.9513, k);
                let mut p = ObjectParams::cuboid([2.0 * b, 0.5, 1.0], 1.0);
                p.mu_ground = mu;
                let state = ObjectState::default();
                let mg = p.mass * cfg.gravity;
                let tips = h_c * mu > b;
                let f_tip = mg * b / h_c;
                let max_steps = (cfg.contact_force_cap / df).ceil() as usize;
                let mut onset = None;
                for step in 1..=max_steps {
                    let pen = dpen * step as f64;
                    let ee = Vector3::new(b - pen, 0.0, h_c);
                    let c =
                        resolve_contact(&ee, &Vector3::new(-dpen / cfg.dt, 0.0, 0.0), &p, &state);
                    if tilt_update(&c, &p, &state, &cfg).tilt.angle > 0.0 {
                        onset = Some(step);
                        break;
                    }
                }
                out.cases += 1;
                match (tips, onset) {
                    (true, Some(step)) => {
                        out.tipping_cases += 1;
                        let t_star = f_tip / df;
                        out.max_timing_error_steps =
                            out.max_timing_error_steps.max((step as f64 - t_star).abs());
                    }
                    (false, None) => {}
                    _ => out.mismatches += 1,
                }
            }
        }
    }
    out
}

/// Topple angle found by bisection on the tilt at which the CoM passes over
/// the support edge, for random objects and tilt headings. Returns the
/// largest gap to both `topple_angle` and `atan(b / h_com)`.
pub fn topple_angle_error(n: usize, seed: u64) -> f64 {
    use catpush::physics::{topple_angle, Tilt};
    use nalgebra::Vector3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut err = 0.0f64;
    for i in 0..n {
        let mut p = if i % 2 == 0 {
            ObjectParams::cuboid(
                [
                    rng.random_range(0.25..0.75),
                    rng.random_range(0.25..0.75),
                    rng.random_range(0.4..1.0),
                ],
                rng.random_range(1.0..10.0),
            )
        } else {
            ObjectParams::cylinder(
                rng.random_range(0.25..0.75),
                rng.random_range(0.4..1.0),
                rng.random_range(1.0..10.0),
            )
        };
        p.com_offset = Vector3::new(
            rng.random_range(-0.25..0.25) * p.dims.x / 2.0,
            rng.random_range(-0.25..0.25) * p.dims.y / 2.0,
            rng.random_range(-0.6..0.25) * p.dims.z / 2.0,
        );
        let yaw: f64 = rng.random_range(-3.1..3.1);
        let rel = match p.shape {
            Shape::Cuboid => std::f64::consts::FRAC_PI_2 * rng.random_range(0..4) as f64,
            Shape::Cylinder => rng.random_range(-3.1..3.1),
        };
        let heading = yaw + rel;
        let (uy, ux) = heading.sin_cos();
        let com = [
            p.com_offset.x,
            p.com_offset.y,
            p.dims.z / 2.0 + p.com_offset.z,
        ];
        // Signed horizontal distance of the CoM behind the support edge.
        let behind = |angle: f64| {
            let mut s = ObjectState::at(catpush::physics::PlanarPose::new(0.3, -0.2, yaw));
            s.tilt = Tilt {
                angle,
                axis_yaw: heading,
            };
            let tilted = body_to_world(&p, &s, com);
            let edge = match p.shape {
                Shape::Cuboid => {
                    rel.cos().abs() * p.dims.x / 2.0 + rel.sin().abs() * p.dims.y / 2.0
                }
                Shape::Cylinder => p.dims.x / 2.0,
            };
            let pivot = [0.3 + edge * ux, -0.2 + edge * uy];
            (pivot[0] - tilted[0]) * ux + (pivot[1] - tilted[1]) * uy
        };
        let (mut lo, mut hi) = (0.0, std::f64::consts::FRAC_PI_2);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if behind(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let state = ObjectState {
            pose: catpush::physics::PlanarPose::new(0.3, -0.2, yaw),
            tilt: Tilt {
                angle: 0.0,
                axis_yaw: heading,
            },
            ..Default::default()
        };
        let b = behind(0.0);
        err = err.max((topple_angle(&p, &state) - oracle).abs());
        err = err.max(((b / com[2]).atan() - oracle).abs());
    }
    err
}

/// Noise check over `samples` actor observations from random rollouts.
#[derive(Debug, Clone, Default)]
pub struct NoiseBoundResult {
    pub samples: usize,
    pub violations: usize,
    /// Largest observed |noise| / half-width per actor group.
    pub max_ratio: Vec<(String, f64)>,
}

/// Compares noisy actor observations with the noiseless actor block of the
/// critic observation at every step.
pub fn noise_bounds(samples: usize, seed: u64) -> NoiseBoundResult {
    use catpush::env::obs::layout;
    let cfg = TaskConfig::default();
    let n = &cfg.env.noise;
    let half_widths = [
        n.ee_object_position,
        n.object_rotation,
        n.joint_position,
        n.base_linear_velocity,
        n.base_angular_velocity,
        n.joint_velocity,
        n.projected_gravity,
        n.object_goal_position,
        n.goal_rotation,
        0.0,
    ];
    let mut ratio = [0.0f64; 10];
    let mut violations = 0;
    let mut count = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut episode = 0;
    let mut check = |actor: &[f64], critic: &[f64], count: &mut usize| {
        for (g, (_, r)) in layout::ACTOR.iter().enumerate() {
            for i in r.clone() {
                let d = (actor[i] - critic[i]).abs();
                // Rounding of the addition itself.
                let tol = 4.0 * f64::EPSILON * critic[i].abs().max(1.0);
                if d > half_widths[g] + tol {
                    violations += 1;
                }
                if half_widths[g] > 0.0 {
                    ratio[g] = ratio[g].max(d / half_widths[g]);
                }
            }
        }
        *count += 1;
    };
    while count < samples {
        let (mut task, a0, c0) = PushTask::reset(catpush::rng::stream(seed, 77, episode), &cfg);
        episode += 1;
        check(&a0.0, &c0.0, &mut count);
        while count < samples {
            let a: [f64; ACTION_DIM] = std::array::from_fn(|_| 2.0 * rng.random::<f64>() - 1.0);
            let Ok(step) = task.step(&ActionVec(a), &cfg, 0) else {
                break;
            };
            check(&step.actor_obs.0, &step.critic_obs.0, &mut count);
            if step.termination.is_done() {
                break;
            }
        }
    }
    NoiseBoundResult {
        samples: count,
        violations,
        max_ratio: layout::ACTOR
            .iter()
            .zip(ratio)
            .map(|((name, _), r)| (name.to_string(), r))
            .collect(),
    }
}

/// Path of a shipped configuration file.
pub fn config_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

pub fn smoke_config() -> catpush::config::RunConfig {
    catpush::config::RunConfig::load(&config_path("smoke.toml")).expect("smoke config loads")
}

/// Metrics CSV of a fresh training run.
pub fn train_csv(setup: &catpush::rl::TrainSetup) -> String {
    let mut sink = catpush::rl::MemorySink::default();
    let mut trainer = catpush::rl::Trainer::new(setup.clone());
    catpush::rl::train(&mut trainer, &mut sink).expect("training succeeds");
    sink.csv
}
