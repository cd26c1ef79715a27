//! `catpush`: train, evaluate and replay constrained pushing policies.
//!
//! Exit status is 0 on success, 1 on a runtime fault and 2 on a
//! configuration error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use catpush::config::{ConfigError, RunConfig};
use catpush::constraints::violation_table_csv;
use catpush::eval::trajectory::{read_dump, to_csv, write_dump, TrajectoryRecord};
use catpush::eval::{
    ablation_csv, episodes_csv, footprint_csv, footprint_sweep, run_eval, violation_percentages,
    AblationRow, TrajectoryHeader,
};
use catpush::formats::{combine_hashes, Provenance};
use catpush::rl::{
    train, Checkpoint, CheckpointError, IterationMetrics, TrainError, TrainSink, Trainer,
};

#[derive(Parser)]
#[command(
    name = "catpush",
    version,
    about = "Constrained PPO for non-prehensile pushing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write metrics and checkpoints.
    Train {
        /// TOML run configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `ppo.iterations`.
        #[arg(long)]
        iterations: Option<u64>,
        /// Continue from a checkpoint of the same configuration.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a trained checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Run configuration; defaults to `config.toml` next to the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Report directory.
        #[arg(long, default_value = "report")]
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = Experiment::Standard)]
        experiment: Experiment,
        /// Ablation: directory holding one training run per variant.
        #[arg(long)]
        runs: Option<PathBuf>,
        /// Standard: dump trajectories of the first N episodes.
        #[arg(long)]
        trajectories: Option<usize>,
        /// Sample actions instead of using the policy mean.
        #[arg(long)]
        stochastic: bool,
    },
    /// Convert a trajectory dump to CSV.
    Replay {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, value_enum, default_value_t = ReplayFormat::Csv)]
        format: ReplayFormat,
        /// Output file; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Standard,
    Ablation,
    FootprintSweep,
    ViolationTable,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReplayFormat {
    Csv,
}

/// Ablation variants in report order: subdirectory name and label.
const ABLATION_VARIANTS: [(&str, &str); 4] = [
    ("centroid", "centroid_target_with_balance"),
    ("centroid_no_balance", "centroid_target_no_balance"),
    ("no_balance", "surface_target_no_balance"),
    ("full", "surface_target_with_balance"),
];

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::ConfigMismatch { .. } => Failure::Config(e.to_string()),
            TrainError::Checkpoint(c) => c.into(),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::SpecHash { .. } => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.into()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train {
            config,
            seed,
            out,
            iterations,
            resume,
        } => cmd_train(config.as_deref(), seed, out, iterations, resume.as_deref()),
        Command::Eval {
            checkpoint,
            config,
            episodes,
            seed,
            report,
            experiment,
            runs,
            trajectories,
            stochastic,
        } => cmd_eval(EvalArgs {
            checkpoint,
            config,
            episodes,
            seed,
            report,
            experiment,
            runs,
            trajectories,
            stochastic,
        }),
        Command::Replay {
            trajectory,
            format: ReplayFormat::Csv,
            output,
        } => cmd_replay(&trajectory, output.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

fn checked(cfg: RunConfig) -> Result<RunConfig, Failure> {
    cfg.validate().map_err(Failure::Config)?;
    Ok(cfg)
}

fn checkpoint_name(iteration: u64) -> String {
    format!("ckpt_{iteration:06}.ckpt")
}

struct FileSink {
    out: PathBuf,
    metrics: fs::File,
    started: Instant,
}

impl TrainSink for FileSink {
    fn on_iteration(&mut self, m: &IterationMetrics) -> Result<(), TrainError> {
        writeln!(self.metrics, "{}", m.csv_row())?;
        self.metrics.flush()?;
        if m.iteration.is_multiple_of(10) || m.iteration == 1 {
            eprintln!(
                "iter {:>6}  reward {:>8.4}  success {:>5.3}  topple {:>5.3}  std {:.3}  {:.0}s",
                m.iteration,
                m.mean_reward,
                m.success_rate,
                m.topple_rate,
                m.action_std,
                self.started.elapsed().as_secs_f64()
            );
        }
        Ok(())
    }

    fn on_checkpoint(&mut self, ck: &Checkpoint, _is_final: bool) -> Result<(), TrainError> {
        let path = self.out.join(checkpoint_name(ck.iteration));
        ck.save(&path)?;
        eprintln!("checkpoint {}", path.display());
        Ok(())
    }
}

fn cmd_train(
    config: Option<&Path>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    iterations: Option<u64>,
    resume: Option<&Path>,
) -> Result<(), Failure> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    if let Some(n) = iterations {
        cfg.ppo.iterations = n;
    }
    let cfg = checked(cfg)?;
    let setup = cfg.train_setup();
    let mut trainer = match resume {
        Some(p) => {
            let ck = Checkpoint::load(p, &setup.network)?;
            Trainer::resume(setup, ck)?
        }
        None => Trainer::new(setup),
    };
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    let metrics_path = out.join("metrics.csv");
    let provenance = Provenance::new(cfg.seed, &cfg.config_hash());
    let append = resume.is_some() && metrics_path.exists();
    let mut metrics = fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(&metrics_path)
        .with_context(|| format!("opening {}", metrics_path.display()))?;
    if !append {
        writeln!(metrics, "{}", provenance.csv_comment())?;
        writeln!(metrics, "{}", IterationMetrics::csv_header())?;
    }
    let mut sink = FileSink {
        out: out.clone(),
        metrics,
        started: Instant::now(),
    };
    let ck = train(&mut trainer, &mut sink)?;
    eprintln!("finished at iteration {} ({})", ck.iteration, out.display());
    Ok(())
}

struct EvalArgs {
    checkpoint: Option<PathBuf>,
    config: Option<PathBuf>,
    episodes: Option<usize>,
    seed: Option<u64>,
    report: PathBuf,
    experiment: Experiment,
    runs: Option<PathBuf>,
    trajectories: Option<usize>,
    stochastic: bool,
}

/// Loads the configuration for a checkpoint: an explicit file, else the
/// snapshot written next to the checkpoint, else the defaults.
fn config_for_checkpoint(explicit: Option<&Path>, checkpoint: &Path) -> Result<RunConfig, Failure> {
    if explicit.is_some() {
        return load_config(explicit);
    }
    let sibling = checkpoint
        .parent()
        .unwrap_or(Path::new("."))
        .join("config.toml");
    if sibling.exists() {
        Ok(RunConfig::load(&sibling)?)
    } else {
        Ok(RunConfig::default())
    }
}

fn apply_eval_overrides(cfg: &mut RunConfig, args: &EvalArgs) {
    if let Some(n) = args.episodes {
        cfg.eval.episodes = n;
    }
    if let Some(s) = args.seed {
        cfg.eval.seed = s;
    }
    if let Some(n) = args.trajectories {
        cfg.eval.trajectory_episodes = n;
    }
    if args.stochastic {
        cfg.eval.deterministic = false;
    }
}

/// Loads a checkpoint and checks it belongs to `cfg`.
fn load_policy(cfg: &RunConfig, path: &Path) -> Result<Checkpoint, Failure> {
    let ck = Checkpoint::load(path, &cfg.network)?;
    let expected = cfg.train_setup().resume_hash();
    if ck.config_hash != expected {
        return Err(Failure::Config(format!(
            "checkpoint {} was trained with a different configuration",
            path.display()
        )));
    }
    Ok(ck)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).context("serialising report")?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), Failure> {
    fs::create_dir_all(&args.report)
        .with_context(|| format!("creating {}", args.report.display()))?;
    if args.experiment == Experiment::Ablation {
        return eval_ablation(&args);
    }
    let ck_path = match &args.checkpoint {
        Some(p) => p.clone(),
        None => {
            let cfg = load_config(args.config.as_deref())?;
            cfg.eval.checkpoint.clone().ok_or_else(|| {
                Failure::Config("no checkpoint given (--checkpoint or eval.checkpoint)".into())
            })?
        }
    };
    let mut cfg = config_for_checkpoint(args.config.as_deref(), &ck_path)?;
    apply_eval_overrides(&mut cfg, &args);
    let cfg = checked(cfg)?;
    let ck = load_policy(&cfg, &ck_path)?;
    let provenance = Provenance::new(cfg.eval.seed, &cfg.config_hash());
    let task = cfg.task();
    let report = &args.report;
    match args.experiment {
        Experiment::Standard | Experiment::ViolationTable => {
            let out = run_eval(
                &ck.model,
                &task,
                &cfg.eval,
                ck.iteration,
                provenance.clone(),
            )
            .context("evaluation failed")?;
            if args.experiment == Experiment::Standard {
                fs::write(
                    report.join("episodes.csv"),
                    episodes_csv(&out.metrics(), &provenance),
                )?;
                write_json(&report.join("summary.json"), &out.report)?;
                write_trajectories(report, &provenance, &out.runs)?;
                eprintln!(
                    "success {:.2}%  toppled {:.2}%  ({} episodes)",
                    out.report.success_rate_pct, out.report.topple_rate_pct, out.report.episodes
                );
            } else {
                let table = violation_table_csv(&violation_percentages(&out.report));
                fs::write(
                    report.join("violation_table.csv"),
                    format!("{}\n{table}", provenance.csv_comment()),
                )?;
                write_json(&report.join("summary.json"), &out.report)?;
                eprint!("{table}");
            }
        }
        Experiment::FootprintSweep => {
            let buckets = footprint_sweep(&ck.model, &task, &cfg.eval, ck.iteration)
                .context("sweep failed")?;
            let csv = footprint_csv(&buckets, &provenance);
            fs::write(report.join("footprint_sweep.csv"), &csv)?;
            write_json(
                &report.join("footprint_sweep.json"),
                &serde_json::json!({ "provenance": provenance, "buckets": buckets }),
            )?;
            eprint!("{csv}");
        }
        Experiment::Ablation => unreachable!(),
    }
    Ok(())
}

fn write_trajectories(
    report: &Path,
    provenance: &Provenance,
    runs: &[catpush::eval::EpisodeRun],
) -> Result<(), Failure> {
    let kept: Vec<(usize, &Vec<TrajectoryRecord>)> = runs
        .iter()
        .filter_map(|r| r.trajectory.as_ref().map(|t| (r.metrics.episode, t)))
        .collect();
    if kept.is_empty() {
        return Ok(());
    }
    let dir = report.join("trajectories");
    fs::create_dir_all(&dir)?;
    for (episode, records) in kept {
        let header = TrajectoryHeader::new(provenance.clone(), episode);
        fs::write(
            dir.join(format!("episode_{episode:05}.jsonl")),
            write_dump(&header, records),
        )?;
    }
    Ok(())
}

/// Most recent checkpoint in a run directory.
fn latest_checkpoint(dir: &Path) -> Option<PathBuf> {
    let mut found: Vec<PathBuf> = fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.starts_with("ckpt_") && name.ends_with(".ckpt")
        })
        .collect();
    found.sort();
    found.pop()
}

fn eval_ablation(args: &EvalArgs) -> Result<(), Failure> {
    let runs = args
        .runs
        .as_ref()
        .ok_or_else(|| Failure::Config("ablation needs --runs <dir>".into()))?;
    let mut rows = Vec::new();
    let mut seed = None;
    let mut hashes = Vec::new();
    for (dir, label) in ABLATION_VARIANTS {
        let run_dir = runs.join(dir);
        let Some(ck_path) = latest_checkpoint(&run_dir) else {
            eprintln!(
                "{label}: no checkpoint in {}, reported as untrained",
                run_dir.display()
            );
            rows.push(AblationRow {
                label: label.to_string(),
                trained: false,
                success_rate_pct: None,
                topple_rate_pct: None,
            });
            continue;
        };
        let mut cfg = config_for_checkpoint(None, &ck_path)?;
        apply_eval_overrides(&mut cfg, args);
        let cfg = checked(cfg)?;
        let ck = load_policy(&cfg, &ck_path)?;
        let provenance = Provenance::new(cfg.eval.seed, &cfg.config_hash());
        let out = run_eval(
            &ck.model,
            &cfg.task(),
            &cfg.eval,
            ck.iteration,
            provenance.clone(),
        )
        .context("evaluation failed")?;
        eprintln!(
            "{label}: success {:.2}%  toppled {:.2}%",
            out.report.success_rate_pct, out.report.topple_rate_pct
        );
        seed.get_or_insert(cfg.eval.seed);
        hashes.push(provenance.config_hash);
        rows.push(AblationRow {
            label: label.to_string(),
            trained: true,
            success_rate_pct: Some(out.report.success_rate_pct),
            topple_rate_pct: Some(out.report.topple_rate_pct),
        });
    }
    let combined = combine_hashes(&hashes);
    let provenance = Provenance::new(seed.unwrap_or(0), &combined);
    fs::write(
        report_path(args, "ablation.csv"),
        ablation_csv(&rows, &provenance),
    )?;
    write_json(
        &report_path(args, "ablation.json"),
        &serde_json::json!({ "provenance": provenance, "rows": rows }),
    )?;
    Ok(())
}

fn report_path(args: &EvalArgs, name: &str) -> PathBuf {
    args.report.join(name)
}

fn cmd_replay(path: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let csv = if text.trim().is_empty() {
        let unknown = Provenance::new(0, &[0; 32]);
        format!(
            "{}\n{}\n",
            unknown.csv_comment(),
            TrajectoryRecord::csv_header()
        )
    } else {
        let (header, records) =
            read_dump(&text).with_context(|| format!("corrupt trajectory {}", path.display()))?;
        to_csv(&header, &records)
    };
    match output {
        Some(p) => fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(())
}
