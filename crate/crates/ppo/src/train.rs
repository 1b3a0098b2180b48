//! Rollout collection and the training loop.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use auv_core::dynamics::VehicleParams;
use auv_core::env::{EnvBatch, EnvConfig, EnvError, Observation, StepResult, ACT_DIM, OBS_DIM};
use auv_core::rng::{stream, StreamDomain, StreamRng};
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::adam::Adam;
use crate::buffer::{compute_gae, RolloutBuffer};
use crate::checkpoint::{save_checkpoint, CheckpointError};
use crate::policy::{obs_matrix, sample_action, PolicySnapshot};
use crate::update::{ppo_update, PpoConfig, PpoError, UpdateStats};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Ppo(#[from] PpoError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub iteration: usize,
    pub wall_s: f64,
    pub env_steps: u64,
    /// Mean per-step rollout reward as a fraction of the maximum reward.
    pub norm_mean_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_frac: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLog {
    pub row: LogRow,
    pub update: UpdateStats,
    /// Environments that diverged and were reset during the rollout.
    pub diverged: usize,
    pub mean_std: f64,
}

pub struct Trainer {
    cfg: PpoConfig,
    env: EnvBatch,
    policy: PolicySnapshot,
    opt: Adam,
    obs: Vec<[f64; OBS_DIM]>,
    action_rngs: Vec<StreamRng>,
    minibatch_rng: StreamRng,
    buffer: RolloutBuffer,
    step_out: StepResult,
    iteration: usize,
    env_steps: u64,
    wall_s: f64,
}

fn rows(obs: &[Observation]) -> Vec<[f64; OBS_DIM]> {
    obs.iter().map(|o| o.0).collect()
}

impl Trainer {
    /// Builds the environments and a freshly initialized policy. Episode clocks
    /// start at random offsets so resets are spread over time.
    pub fn new(
        cfg: PpoConfig,
        env_cfg: EnvConfig,
        vehicle: VehicleParams,
        seed: u64,
        pool: Option<Arc<ThreadPool>>,
    ) -> Result<Self, TrainError> {
        cfg.validate()?;
        let mut env = EnvBatch::new(env_cfg, vehicle, seed)?;
        if let Some(pool) = pool {
            env = env.with_thread_pool(pool);
        }
        let obs = rows(&env.reset_all(true)?);
        let n = env.n_envs();
        let policy = PolicySnapshot::init(cfg.architecture(), cfg.init_log_std, &mut stream(seed, StreamDomain::Init, 0))
            .map_err(|e| PpoError::InvalidConfig(e.to_string()))?;
        let opt = Adam::new(policy.theta().len(), cfg.learning_rate);
        Ok(Self {
            action_rngs: (0..n as u64).map(|i| stream(seed, StreamDomain::Policy, i)).collect(),
            minibatch_rng: stream(seed, StreamDomain::Minibatch, 0),
            buffer: RolloutBuffer::new(n, cfg.horizon),
            step_out: StepResult::default(),
            cfg,
            env,
            policy,
            opt,
            obs,
            iteration: 0,
            env_steps: 0,
            wall_s: 0.0,
        })
    }

    pub fn policy(&self) -> &PolicySnapshot {
        &self.policy
    }

    pub fn config(&self) -> &PpoConfig {
        &self.cfg
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    fn values(&self, obs: &[[f64; OBS_DIM]]) -> Vec<f64> {
        let (_, v) = self.policy.forward_batch(obs_matrix::<f32>(obs).view());
        v.iter().map(|&x| x as f64).collect()
    }

    /// Collects one rollout; returns (mean raw reward per step, diverged count).
    fn collect(&mut self) -> Result<(f64, usize), TrainError> {
        let n = self.env.n_envs();
        let gamma = self.cfg.gamma;
        self.buffer.clear();
        let (mut reward_sum, mut diverged) = (0.0, 0usize);
        let mut raw = vec![[0.0; ACT_DIM]; n];
        let mut log_probs = vec![0.0; n];
        for _ in 0..self.cfg.horizon {
            let (mean, value) = self.policy.forward_batch(obs_matrix::<f32>(&self.obs).view());
            let log_std: [f64; ACT_DIM] = std::array::from_fn(|j| self.policy.log_std()[j] as f64);
            for i in 0..n {
                let m: [f64; ACT_DIM] = std::array::from_fn(|j| mean[[i, j]] as f64);
                let s = sample_action(&m, &log_std, &mut self.action_rngs[i]);
                raw[i] = s.raw;
                log_probs[i] = s.log_prob;
            }
            self.env.step_into(&raw, &mut self.step_out)?;
            let r = &self.step_out;
            reward_sum += r.rewards.iter().sum::<f64>();
            diverged += r.diverged_count();
            let mut rewards = r.rewards.clone();
            // time limits are not terminal states: fold the tail value into the reward
            let cut: Vec<usize> = (0..n).filter(|&i| r.truncated[i]).collect();
            if !cut.is_empty() {
                let term: Vec<[f64; OBS_DIM]> = cut.iter().map(|&i| r.obs[i].0).collect();
                for (&i, v) in cut.iter().zip(self.values(&term)) {
                    rewards[i] += gamma * v;
                }
            }
            let values: Vec<f64> = value.iter().map(|&v| v as f64).collect();
            let dones = r.dones.clone();
            self.buffer.push_step(&self.obs, &raw, &log_probs, &rewards, &values, &dones);
            for (o, next) in self.obs.iter_mut().zip(&r.obs) {
                *o = next.0;
            }
            let finished: Vec<usize> = (0..n).filter(|&i| dones[i]).collect();
            for (&i, o) in finished.iter().zip(self.env.reset_envs(&finished)?) {
                self.obs[i] = o.0;
            }
        }
        self.env_steps += (n * self.cfg.horizon) as u64;
        Ok((reward_sum / (n * self.cfg.horizon) as f64, diverged))
    }

    /// One collect → advantage → update cycle.
    pub fn iterate(&mut self) -> Result<IterationLog, TrainError> {
        let start = Instant::now();
        let (mean_reward, diverged) = self.collect()?;
        let bootstrap = self.values(&self.obs);
        let (adv, ret) = compute_gae(&self.buffer, &bootstrap, self.cfg.gamma, self.cfg.lambda);
        let update = ppo_update(&mut self.policy, &mut self.opt, &self.buffer, &adv, &ret, &self.cfg, &mut self.minibatch_rng)?;
        self.iteration += 1;
        self.wall_s += start.elapsed().as_secs_f64();
        let max_r = self.env.config().reward.max_reward();
        let mean_std = self.policy.log_std().iter().map(|s| (*s as f64).exp()).sum::<f64>() / ACT_DIM as f64;
        Ok(IterationLog {
            row: LogRow {
                iteration: self.iteration,
                wall_s: self.wall_s,
                env_steps: self.env_steps,
                norm_mean_reward: mean_reward / max_r,
                policy_loss: update.loss.policy,
                value_loss: update.loss.value,
                entropy: update.loss.entropy,
                clip_frac: update.loss.clip_frac,
            },
            update,
            diverged,
            mean_std,
        })
    }
}

/// Where training artifacts go.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub dir: PathBuf,
    /// Stored in every checkpoint header.
    pub config_hash: String,
}

impl TrainOutput {
    pub fn log_path(&self) -> PathBuf {
        self.dir.join("training.csv")
    }

    pub fn final_checkpoint(&self) -> PathBuf {
        self.dir.join("policy.ckpt")
    }

    pub fn periodic_checkpoint(&self, iteration: usize) -> PathBuf {
        self.dir.join(format!("policy_{iteration:05}.ckpt"))
    }
}

/// Runs `cfg.iterations` iterations, writing the training log row by row and
/// checkpoints at the configured cadence plus a final one.
pub fn train(
    cfg: PpoConfig,
    env_cfg: EnvConfig,
    vehicle: VehicleParams,
    seed: u64,
    pool: Option<Arc<ThreadPool>>,
    out: Option<&TrainOutput>,
    mut on_iteration: impl FnMut(&IterationLog),
) -> Result<(PolicySnapshot, Vec<IterationLog>), TrainError> {
    let iterations = cfg.iterations;
    let every = cfg.checkpoint_every;
    let mut trainer = Trainer::new(cfg, env_cfg, vehicle, seed, pool)?;
    let mut writer = match out {
        Some(o) => {
            std::fs::create_dir_all(&o.dir)?;
            Some(csv::Writer::from_writer(File::create(o.log_path())?))
        }
        None => None,
    };
    let mut logs = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let log = trainer.iterate()?;
        if let (Some(w), Some(o)) = (writer.as_mut(), out) {
            w.serialize(log.row)?;
            w.flush()?;
            if every > 0 && log.row.iteration % every == 0 {
                save_checkpoint(&o.periodic_checkpoint(log.row.iteration), trainer.policy(), &o.config_hash)?;
            }
        }
        on_iteration(&log);
        logs.push(log);
    }
    if let Some(o) = out {
        save_checkpoint(&o.final_checkpoint(), trainer.policy(), &o.config_hash)?;
    }
    Ok((trainer.policy, logs))
}

/// Reads a training log written by [`train`].
pub fn read_log(path: &Path) -> Result<Vec<LogRow>, TrainError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}
