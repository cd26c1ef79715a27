//! Frozen-policy evaluation: success and topple rates, constraint
//! violation time, face switches and EE contact heights.

pub mod analysis;
pub mod trajectory;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::constraints::{
    violation_time_accumulate, ConstraintKind, ViolationCounter, NUM_IMPLEMENTED,
};
use crate::env::{
    goal_errors, ActionVec, ActorObs, EnvError, ObjectOverride, Termination, ACTION_DIM, ACTOR_DIM,
};
use crate::formats::Provenance;
use crate::physics::Shape;
use crate::rl::model::ActorCritic;
use crate::rl::policy::sample;
use crate::rng::{purpose, stream, SimRng};
use crate::task::{PushTask, TaskConfig};

pub use analysis::{count_face_switches, quartiles, Quartiles};
pub use trajectory::{TrajectoryHeader, TrajectoryRecord};

/// Fixed-object sweep over square footprints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FootprintSweepConfig {
    /// Square base side lengths, m.
    pub sizes: Vec<f64>,
    pub height: f64,
    pub mass: f64,
    pub mu_ground: f64,
    /// Successful episodes to collect per size.
    pub successes_per_size: usize,
    pub max_attempts_per_size: usize,
}

impl Default for FootprintSweepConfig {
    fn default() -> Self {
        Self {
            sizes: vec![0.25, 0.35, 0.45, 0.55, 0.65, 0.75],
            height: 0.6,
            mass: 5.0,
            mu_ground: 0.8,
            successes_per_size: 200,
            max_attempts_per_size: 600,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub checkpoint: Option<PathBuf>,
    pub episodes: usize,
    pub seed: u64,
    /// Act with the policy mean instead of sampling.
    pub deterministic: bool,
    /// Overrides the environment's observation-noise switch when set.
    pub observation_noise: Option<bool>,
    /// End an episode at its first success instead of running to timeout.
    pub stop_on_success: bool,
    /// Episodes stepped in lockstep per policy batch.
    pub batch_size: usize,
    pub object_override: ObjectOverride,
    /// Number of leading episodes whose trajectories are kept.
    pub trajectory_episodes: usize,
    pub footprint: FootprintSweepConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            checkpoint: None,
            episodes: 512,
            seed: 1_000_003,
            deterministic: true,
            observation_noise: None,
            stop_on_success: true,
            batch_size: 128,
            object_override: ObjectOverride::default(),
            trajectory_episodes: 0,
            footprint: FootprintSweepConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.episodes == 0 {
            return Err("eval.episodes must be at least 1".into());
        }
        if self.batch_size == 0 {
            return Err("eval.batch_size must be positive".into());
        }
        let f = &self.footprint;
        if f.sizes.iter().any(|s| !(*s > 0.0))
            || !(f.height > 0.0 && f.mass > 0.0 && f.mu_ground > 0.0)
        {
            return Err("eval.footprint: sizes, height, mass and friction must be positive".into());
        }
        if f.max_attempts_per_size == 0 {
            return Err("eval.footprint.max_attempts_per_size must be positive".into());
        }
        Ok(())
    }

    /// Task configuration seen during evaluation.
    pub fn task_for_eval(&self, task: &TaskConfig) -> TaskConfig {
        let mut t = task.clone();
        if let Some(noise) = self.observation_noise {
            t.env.observation_noise = noise;
        }
        let o = &self.object_override;
        let target = &mut t.env.object_override;
        if o.cuboid_dims.is_some() {
            target.cuboid_dims = o.cuboid_dims;
        }
        if o.mass.is_some() {
            target.mass = o.mass;
        }
        if o.centered_com.is_some() {
            target.centered_com = o.centered_com;
        }
        if o.mu_ground.is_some() {
            target.mu_ground = o.mu_ground;
        }
        t
    }
}

/// Outcome of one evaluation episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub shape: Shape,
    pub dims: [f64; 3],
    pub success: bool,
    pub toppled: bool,
    pub steps: usize,
    pub steps_to_success: Option<usize>,
    pub violations: ViolationCounter,
    /// `None` for cylinders, which have no faces.
    pub face_switches: Option<u32>,
    /// World EE height at every in-contact step before success.
    pub contact_heights: Vec<f64>,
    pub final_distance: f64,
    pub final_yaw_error: f64,
}

/// An evaluated episode and, when requested, its trajectory.
#[derive(Debug, Clone)]
pub struct EpisodeRun {
    pub metrics: EpisodeMetrics,
    pub trajectory: Option<Vec<TrajectoryRecord>>,
}

struct Running {
    task: PushTask,
    obs: ActorObs,
    rng: SimRng,
    metrics: EpisodeMetrics,
    faces: Vec<i32>,
    trajectory: Option<Vec<TrajectoryRecord>>,
    done: bool,
}

/// Runs the given episode indices with a frozen policy. Episode `i` is fully
/// determined by `(eval.seed, i)`.
pub fn run_episodes(
    model: &ActorCritic,
    task: &TaskConfig,
    eval: &EvalConfig,
    episode_ids: &[usize],
    iteration: u64,
    keep_trajectory: impl Fn(usize) -> bool,
) -> Result<Vec<EpisodeRun>, EnvError> {
    let mut out = Vec::with_capacity(episode_ids.len());
    let dt = task.world.dt;
    for chunk in episode_ids.chunks(eval.batch_size) {
        let mut running: Vec<Running> = chunk
            .iter()
            .map(|&i| {
                let (t, obs, _) =
                    PushTask::reset(stream(eval.seed, purpose::EVAL_EPISODE, i as u64), task);
                let p = &t.spec.object_params;
                let metrics = EpisodeMetrics {
                    episode: i,
                    shape: p.shape,
                    dims: [p.dims.x, p.dims.y, p.dims.z],
                    success: false,
                    toppled: false,
                    steps: 0,
                    steps_to_success: None,
                    violations: ViolationCounter::default(),
                    face_switches: None,
                    contact_heights: Vec::new(),
                    final_distance: 0.0,
                    final_yaw_error: 0.0,
                };
                Running {
                    task: t,
                    obs,
                    rng: stream(eval.seed, purpose::ACTION_SAMPLING, i as u64),
                    metrics,
                    faces: Vec::new(),
                    trajectory: keep_trajectory(i).then(Vec::new),
                    done: false,
                }
            })
            .collect();
        let mut obs = Vec::with_capacity(chunk.len() * ACTOR_DIM);
        let mut action = [0.0; ACTION_DIM];
        loop {
            let active: Vec<usize> = (0..running.len()).filter(|&k| !running[k].done).collect();
            if active.is_empty() {
                break;
            }
            obs.clear();
            for &k in &active {
                obs.extend_from_slice(&running[k].obs.0);
            }
            let means = model.action_mean(&obs, active.len());
            for (row, &k) in active.iter().enumerate() {
                let r = &mut running[k];
                let mean = &means[row * ACTION_DIM..(row + 1) * ACTION_DIM];
                if eval.deterministic {
                    action.copy_from_slice(mean);
                } else {
                    sample(mean, &model.log_std, &mut r.rng, &mut action);
                }
                let step = r.task.step(&ActionVec(action), task, iteration)?;
                let tr = &step.transition;
                let m = &mut r.metrics;
                m.steps = tr.step;
                m.violations.record(&step.report);
                r.faces.push(if tr.contact.in_contact {
                    tr.contact.face_index
                } else {
                    crate::physics::NO_FACE
                });
                if tr.contact.in_contact && !tr.success_before {
                    m.contact_heights.push(tr.contact.contact_height);
                }
                if let Some(t) = r.trajectory.as_mut() {
                    t.push(TrajectoryRecord::from_step(&step, dt));
                }
                if tr.success_latched && m.steps_to_success.is_none() {
                    m.steps_to_success = Some(tr.step);
                }
                r.obs = step.actor_obs;
                let toppled = step.termination == Termination::ObjectToppled;
                let finished =
                    step.termination.is_done() || (eval.stop_on_success && tr.success_latched);
                if finished {
                    m.toppled = toppled;
                    m.success = tr.success_latched && !toppled;
                    let (d, yaw) = goal_errors(&tr.object, &r.task.spec.goal_pose);
                    m.final_distance = d;
                    m.final_yaw_error = yaw;
                    if m.shape == Shape::Cuboid {
                        m.face_switches = Some(count_face_switches(&r.faces));
                    }
                    r.done = true;
                }
            }
        }
        out.extend(running.into_iter().map(|r| EpisodeRun {
            metrics: r.metrics,
            trajectory: r.trajectory,
        }));
    }
    Ok(out)
}

/// Aggregate statistics of an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub provenance: Provenance,
    pub episodes: usize,
    pub successes: usize,
    pub toppled: usize,
    pub success_rate_pct: f64,
    pub topple_rate_pct: f64,
    pub cuboid_episodes: usize,
    /// Mean over cuboid episodes; `None` when there were none.
    pub mean_face_switches: Option<f64>,
    pub mean_steps_to_success: Option<f64>,
    /// Mean per-episode percentage of steps each constraint was violated.
    pub violation_time_pct: BTreeMap<String, f64>,
}

pub fn aggregate(episodes: &[EpisodeMetrics], provenance: Provenance) -> AggregateReport {
    let n = episodes.len();
    let successes = episodes.iter().filter(|e| e.success).count();
    let toppled = episodes.iter().filter(|e| e.toppled).count();
    let faces: Vec<u32> = episodes.iter().filter_map(|e| e.face_switches).collect();
    let sts: Vec<usize> = episodes
        .iter()
        .filter(|e| e.success)
        .filter_map(|e| e.steps_to_success)
        .collect();
    let counters: Vec<ViolationCounter> = episodes.iter().map(|e| e.violations).collect();
    let pct = violation_time_accumulate(&counters);
    let pct_of = |c: usize| {
        if n == 0 {
            0.0
        } else {
            100.0 * c as f64 / n as f64
        }
    };
    AggregateReport {
        provenance,
        episodes: n,
        successes,
        toppled,
        success_rate_pct: pct_of(successes),
        topple_rate_pct: pct_of(toppled),
        cuboid_episodes: faces.len(),
        mean_face_switches: (!faces.is_empty())
            .then(|| faces.iter().map(|&f| f as f64).sum::<f64>() / faces.len() as f64),
        mean_steps_to_success: (!sts.is_empty())
            .then(|| sts.iter().sum::<usize>() as f64 / sts.len() as f64),
        violation_time_pct: ConstraintKind::IMPLEMENTED
            .iter()
            .zip(pct)
            .map(|(k, p)| (k.name().to_string(), p))
            .collect(),
    }
}

/// Violation percentages in the fixed constraint order.
pub fn violation_percentages(report: &AggregateReport) -> [f64; NUM_IMPLEMENTED] {
    ConstraintKind::IMPLEMENTED.map(|k| {
        report
            .violation_time_pct
            .get(k.name())
            .copied()
            .unwrap_or(0.0)
    })
}

/// Per-episode CSV with a provenance comment line.
pub fn episodes_csv(episodes: &[EpisodeMetrics], provenance: &Provenance) -> String {
    let mut out = provenance.csv_comment();
    out.push('\n');
    let mut header = vec![
        "episode",
        "shape",
        "dim_x",
        "dim_y",
        "dim_z",
        "success",
        "toppled",
        "steps",
        "steps_to_success",
        "final_distance",
        "final_yaw_error",
        "face_switches",
        "contact_samples",
        "median_contact_height",
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    header.extend(
        ConstraintKind::IMPLEMENTED
            .iter()
            .map(|k| format!("viol_pct_{}", k.name())),
    );
    out.push_str(&header.join(","));
    out.push('\n');
    for e in episodes {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let mut row = vec![
            e.episode.to_string(),
            e.shape.name().to_string(),
            e.dims[0].to_string(),
            e.dims[1].to_string(),
            e.dims[2].to_string(),
            (e.success as u8).to_string(),
            (e.toppled as u8).to_string(),
            e.steps.to_string(),
            opt(e.steps_to_success.map(|s| s.to_string())),
            e.final_distance.to_string(),
            e.final_yaw_error.to_string(),
            opt(e.face_switches.map(|s| s.to_string())),
            e.contact_heights.len().to_string(),
            opt(quartiles(&e.contact_heights).map(|q| q.median.to_string())),
        ];
        row.extend(e.violations.percentages().iter().map(|p| p.to_string()));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Result of [`run_eval`].
#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub runs: Vec<EpisodeRun>,
    pub report: AggregateReport,
}

impl EvalOutput {
    pub fn metrics(&self) -> Vec<EpisodeMetrics> {
        self.runs.iter().map(|r| r.metrics.clone()).collect()
    }
}

/// Evaluates `eval.episodes` randomised episodes.
pub fn run_eval(
    model: &ActorCritic,
    task: &TaskConfig,
    eval: &EvalConfig,
    iteration: u64,
    provenance: Provenance,
) -> Result<EvalOutput, EnvError> {
    let task = eval.task_for_eval(task);
    let ids: Vec<usize> = (0..eval.episodes).collect();
    let runs = run_episodes(model, &task, eval, &ids, iteration, |i| {
        i < eval.trajectory_episodes
    })?;
    let metrics: Vec<EpisodeMetrics> = runs.iter().map(|r| r.metrics.clone()).collect();
    let report = aggregate(&metrics, provenance);
    Ok(EvalOutput { runs, report })
}

/// Contact-height distribution of one footprint size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintBucket {
    pub footprint: f64,
    pub attempts: usize,
    pub successes: usize,
    /// `None` when no successful episode produced contact samples.
    pub heights: Option<Quartiles>,
}

/// Fixed-object episodes per footprint size; heights are pooled over the
/// successful episodes of each size.
pub fn footprint_sweep(
    model: &ActorCritic,
    task: &TaskConfig,
    eval: &EvalConfig,
    iteration: u64,
) -> Result<Vec<FootprintBucket>, EnvError> {
    let f = &eval.footprint;
    let mut buckets = Vec::with_capacity(f.sizes.len());
    for (b, &size) in f.sizes.iter().enumerate() {
        let mut t = task.clone();
        t.env.observation_noise = false;
        t.env.object_override = ObjectOverride {
            cuboid_dims: Some([size, size, f.height]),
            mass: Some(f.mass),
            centered_com: Some(true),
            mu_ground: Some(f.mu_ground),
        };
        let base = b * 10_000_000;
        let mut attempts = 0;
        let mut successes = 0;
        let mut heights = Vec::new();
        while successes < f.successes_per_size && attempts < f.max_attempts_per_size {
            let n = eval.batch_size.min(f.max_attempts_per_size - attempts);
            let ids: Vec<usize> = (attempts..attempts + n).map(|j| base + j).collect();
            for r in run_episodes(model, &t, eval, &ids, iteration, |_| false)? {
                attempts += 1;
                if r.metrics.success && successes < f.successes_per_size {
                    successes += 1;
                    heights.extend_from_slice(&r.metrics.contact_heights);
                }
            }
        }
        buckets.push(FootprintBucket {
            footprint: size,
            attempts,
            successes,
            heights: quartiles(&heights),
        });
    }
    Ok(buckets)
}

pub fn footprint_csv(buckets: &[FootprintBucket], provenance: &Provenance) -> String {
    let mut out = provenance.csv_comment();
    out.push('\n');
    out.push_str("footprint,attempts,successes,samples,min,q1,median,q3,max\n");
    for b in buckets {
        let q = match &b.heights {
            Some(q) => format!(
                "{},{},{},{},{},{}",
                q.count, q.min, q.q1, q.median, q.q3, q.max
            ),
            None => "0,,,,,".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            b.footprint, b.attempts, b.successes, q
        ));
    }
    out
}

/// One row of the ablation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub trained: bool,
    pub success_rate_pct: Option<f64>,
    pub topple_rate_pct: Option<f64>,
}

pub fn ablation_csv(rows: &[AblationRow], provenance: &Provenance) -> String {
    let mut out = provenance.csv_comment();
    out.push('\n');
    out.push_str("variant,trained,success_rate_pct,topple_rate_pct\n");
    for r in rows {
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.label,
            r.trained as u8,
            f(r.success_rate_pct),
            f(r.topple_rate_pct)
        ));
    }
    out
}
