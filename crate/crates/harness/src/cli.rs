//! Command-line surface: `train`, `eval`, `replay`, `bench`.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use auv_ppo::checkpoint::load_checkpoint;
use auv_ppo::train::{train, TrainOutput};
use clap::{Args, Parser, Subcommand};

use crate::bench::{deterministic_across, throughput};
use crate::config::RunConfig;
use crate::error::HarnessError;
use crate::eval::run_scenario;
use crate::metrics::{summarize, write_metrics};
use crate::replay::{replay, SummaryFile};
use crate::scenario::ScenarioSpec;

#[derive(Debug, Parser)]
#[command(name = "auv", version, about = "Train and evaluate underwater vehicle velocity/attitude policies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy; writes checkpoints, training.csv and resolved_config.toml.
    Train(TrainArgs),
    /// Run a trained policy on a scenario; writes metrics.csv and summary.json.
    Eval(EvalArgs),
    /// Downsample a metrics trace and recompute its summary.
    Replay(ReplayArgs),
    /// Measure environment throughput and worker-count determinism.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML run configuration (built-in defaults when omitted).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dotted-key override, e.g. `ppo.iterations=50`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, HarnessError> {
        match &self.config {
            Some(p) => RunConfig::load(p, &self.overrides),
            None => RunConfig::from_toml("", "defaults", &self.overrides),
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for environment stepping (results do not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    /// Seed for random attitude schedules (defaults to the scenario's).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Supplies vehicle and timing parameters.
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep every n-th step in the trace.
    #[arg(long, default_value_t = 10)]
    pub every: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 2048)]
    pub envs: usize,
    #[arg(long, default_value_t = 250)]
    pub steps: usize,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also bit-compare runs on 1 and `threads` (at least 2) workers.
    #[arg(long)]
    pub check_determinism: bool,
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn cmd_train(a: TrainArgs) -> Result<(), HarnessError> {
    let mut cfg = a.config.load()?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = a.out {
        cfg.output_dir = o;
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("resolved_config.toml"), cfg.to_toml())?;
    let pool = match a.threads {
        Some(t) => Some(Arc::new(
            rayon::ThreadPoolBuilder::new().num_threads(t).build().map_err(|e| HarnessError::Runtime(e.to_string()))?,
        )),
        None => None,
    };
    let out = TrainOutput { dir: cfg.output_dir.clone(), config_hash: cfg.hash() };
    let quiet = a.quiet;
    let (_, logs) = train(cfg.ppo.clone(), cfg.env.clone(), cfg.vehicle.clone(), cfg.seed, pool, Some(&out), |l| {
        if !quiet {
            eprintln!(
                "iter {:4}  {:7.1}s  reward {:.4}  policy {:+.4}  value {:.4}  std {:.3}  clip {:.3}  kl {:.4}  lr {:.1e}  diverged {}",
                l.row.iteration,
                l.row.wall_s,
                l.row.norm_mean_reward,
                l.row.policy_loss,
                l.row.value_loss,
                l.mean_std,
                l.row.clip_frac,
                l.update.loss.policy_kl,
                l.update.learning_rate,
                l.diverged
            );
        }
    })
    .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    if let Some(l) = logs.last() {
        println!("trained {} iterations; final normalized reward {:.4}", l.row.iteration, l.row.norm_mean_reward);
    }
    println!("artifacts in {}", out.dir.display());
    Ok(())
}

/// Loads the checkpoint and scenario, runs, and writes metrics and summary.
pub fn evaluate_to_dir(
    checkpoint: &Path,
    scenario_path: &Path,
    cfg: &RunConfig,
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<SummaryFile, HarnessError> {
    let (policy, header) = load_checkpoint(checkpoint).map_err(|e| HarnessError::Input(format!("{}: {e}", checkpoint.display())))?;
    let scenario = ScenarioSpec::load(scenario_path)?;
    let seed = seed.unwrap_or(scenario.seed);
    let start = Instant::now();
    let records = run_scenario(&policy, &scenario, &cfg.env, &cfg.vehicle, seed)?;
    let runtime_s = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(out_dir)?;
    write_metrics(&out_dir.join("metrics.csv"), &records)?;
    let file = SummaryFile {
        scenario: scenario.id.clone(),
        seed,
        checkpoint: checkpoint.display().to_string(),
        config_hash: header.config_hash,
        runtime_s,
        metrics: summarize(&records)?,
    };
    std::fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&file).expect("summary serializes"))?;
    Ok(file)
}

fn cmd_eval(a: EvalArgs) -> Result<(), HarnessError> {
    let cfg = a.config.load()?;
    let out = match a.out {
        Some(o) => o,
        None => {
            let id = ScenarioSpec::load(&a.scenario)?.id;
            PathBuf::from("runs/eval").join(id)
        }
    };
    let s = evaluate_to_dir(&a.checkpoint, &a.scenario, &cfg, a.seed, &out)?;
    let m = &s.metrics;
    println!(
        "{}: completed {} in {:.1} s; RMS v_e [{:.4}, {:.4}, {:.4}] m/s; attitude RMS {:.2}° mean {:.2}° max {:.2}°; max cross-track {:.3} m",
        s.scenario,
        m.completed,
        m.completion_time_s.unwrap_or(m.duration_s),
        m.rms_v_error_m_s[0],
        m.rms_v_error_m_s[1],
        m.rms_v_error_m_s[2],
        m.rms_attitude_error_deg,
        m.mean_attitude_error_deg,
        m.max_attitude_error_deg,
        m.max_cross_track_m
    );
    println!("metrics and summary in {}", out.display());
    Ok(())
}

fn cmd_replay(a: ReplayArgs) -> Result<(), HarnessError> {
    let out = a.out.unwrap_or_else(|| a.metrics.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf));
    let r = replay(&a.metrics, &out, a.every)?;
    println!("wrote {} trace rows to {}", r.trace_rows, out.join("trace.csv").display());
    match r.stored_deviation {
        Some(Some(d)) if d <= 1e-9 => println!("recomputed summary matches stored summary (max deviation {d:.3e})"),
        Some(Some(d)) => return Err(HarnessError::Runtime(format!("recomputed summary deviates from stored by {d:.3e}"))),
        Some(None) => return Err(HarnessError::Runtime("stored summary has a different structure".into())),
        None => {}
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), HarnessError> {
    let threads = a.threads.unwrap_or_else(default_threads);
    let cfg = auv_core::env::EnvConfig { n_envs: a.envs, ..Default::default() };
    let r = throughput(&cfg, a.steps, threads, a.seed)?;
    println!(
        "{} envs x {} steps on {} threads: {:.3} s, {:.0} env-steps/s",
        r.n_envs, r.steps, r.threads, r.seconds, r.env_steps_per_s
    );
    if a.check_determinism {
        let other = threads.max(2);
        let same = deterministic_across(&cfg, a.steps.min(100), (1, other), a.seed)?;
        println!("determinism 1 vs {other} workers: {}", if same { "identical" } else { "DIFFERENT" });
        if !same {
            return Err(HarnessError::Runtime("results depend on worker count".into()));
        }
    }
    Ok(())
}
