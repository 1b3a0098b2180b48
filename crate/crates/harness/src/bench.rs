//! Environment stepping throughput and worker-count determinism.

use std::sync::Arc;
use std::time::Instant;

use auv_core::dynamics::VehicleParams;
use auv_core::env::{EnvBatch, EnvConfig, StepResult, ACT_DIM};
use serde::Serialize;

use crate::error::HarnessError;

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub n_envs: usize,
    pub threads: usize,
    pub steps: usize,
    pub seconds: f64,
    pub env_steps_per_s: f64,
}

/// Deterministic open-loop excitation, cheap compared with a policy forward pass.
fn actions(n: usize, k: usize, out: &mut [[f64; ACT_DIM]]) {
    for (i, a) in out.iter_mut().enumerate().take(n) {
        for (j, x) in a.iter_mut().enumerate() {
            *x = 0.8 * (0.05 * k as f64 + 0.37 * i as f64 + 1.3 * j as f64).sin();
        }
    }
}

fn pool(threads: usize) -> Result<Arc<rayon::ThreadPool>, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map(Arc::new)
        .map_err(|e| HarnessError::Runtime(e.to_string()))
}

fn batch(cfg: &EnvConfig, seed: u64, threads: usize) -> Result<EnvBatch, HarnessError> {
    let mut b = EnvBatch::new(cfg.clone(), VehicleParams::default(), seed)
        .map_err(|e| HarnessError::Input(e.to_string()))?
        .with_thread_pool(pool(threads)?);
    b.reset_all(true).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    Ok(b)
}

/// Runs `steps` lockstep control steps (resets included) and reports env-steps per second.
pub fn throughput(cfg: &EnvConfig, steps: usize, threads: usize, seed: u64) -> Result<BenchReport, HarnessError> {
    let n = cfg.n_envs;
    let mut b = batch(cfg, seed, threads)?;
    let mut a = vec![[0.0; ACT_DIM]; n];
    let mut out = StepResult::default();
    let start = Instant::now();
    for k in 0..steps {
        actions(n, k, &mut a);
        b.step_into(&a, &mut out).map_err(|e| HarnessError::Runtime(e.to_string()))?;
        let done: Vec<usize> = (0..n).filter(|&i| out.dones[i]).collect();
        b.reset_envs(&done).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    }
    let seconds = start.elapsed().as_secs_f64();
    Ok(BenchReport { n_envs: n, threads, steps, seconds, env_steps_per_s: (n * steps) as f64 / seconds })
}

/// Bitwise digest of observations and rewards over a run.
pub fn digest(cfg: &EnvConfig, steps: usize, threads: usize, seed: u64) -> Result<Vec<u64>, HarnessError> {
    let n = cfg.n_envs;
    let mut b = batch(cfg, seed, threads)?;
    let mut a = vec![[0.0; ACT_DIM]; n];
    let mut out = StepResult::default();
    let mut d = Vec::with_capacity(steps * n * 17);
    for k in 0..steps {
        actions(n, k, &mut a);
        b.step_into(&a, &mut out).map_err(|e| HarnessError::Runtime(e.to_string()))?;
        d.extend(out.rewards.iter().map(|r| r.to_bits()));
        d.extend(out.obs.iter().flat_map(|o| o.0.map(f64::to_bits)));
        let done: Vec<usize> = (0..n).filter(|&i| out.dones[i]).collect();
        b.reset_envs(&done).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    }
    Ok(d)
}

/// Bit-compares runs on two worker counts.
pub fn deterministic_across(cfg: &EnvConfig, steps: usize, threads: (usize, usize), seed: u64) -> Result<bool, HarnessError> {
    Ok(digest(cfg, steps, threads.0, seed)? == digest(cfg, steps, threads.1, seed)?)
}
