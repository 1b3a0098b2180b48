//! On-policy rollout storage and generalized advantage estimation.

use auv_core::env::{ACT_DIM, OBS_DIM};

/// Transitions from `n_envs` environments over `horizon` steps, stored
/// time-major (`t·n_envs + env`).
#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    n_envs: usize,
    horizon: usize,
    len: usize,
    pub obs: Vec<[f64; OBS_DIM]>,
    /// Pre-clamp actions.
    pub actions: Vec<[f64; ACT_DIM]>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
}

impl RolloutBuffer {
    pub fn new(n_envs: usize, horizon: usize) -> Self {
        let cap = n_envs * horizon;
        Self {
            n_envs,
            horizon,
            len: 0,
            obs: Vec::with_capacity(cap),
            actions: Vec::with_capacity(cap),
            log_probs: Vec::with_capacity(cap),
            rewards: Vec::with_capacity(cap),
            values: Vec::with_capacity(cap),
            dones: Vec::with_capacity(cap),
        }
    }

    pub fn n_envs(&self) -> usize {
        self.n_envs
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn steps_filled(&self) -> usize {
        self.len
    }

    pub fn is_full(&self) -> bool {
        self.len == self.horizon
    }

    pub fn clear(&mut self) {
        self.len = 0;
        self.obs.clear();
        self.actions.clear();
        self.log_probs.clear();
        self.rewards.clear();
        self.values.clear();
        self.dones.clear();
    }

    /// Appends one time step for every environment.
    ///
    /// # Panics
    /// If the buffer is full or any slice length differs from `n_envs`.
    pub fn push_step(
        &mut self,
        obs: &[[f64; OBS_DIM]],
        actions: &[[f64; ACT_DIM]],
        log_probs: &[f64],
        rewards: &[f64],
        values: &[f64],
        dones: &[bool],
    ) {
        let n = self.n_envs;
        assert!(self.len < self.horizon, "rollout buffer full");
        assert!(
            obs.len() == n && actions.len() == n && log_probs.len() == n && rewards.len() == n && values.len() == n && dones.len() == n,
            "step width mismatch"
        );
        self.obs.extend_from_slice(obs);
        self.actions.extend_from_slice(actions);
        self.log_probs.extend_from_slice(log_probs);
        self.rewards.extend_from_slice(rewards);
        self.values.extend_from_slice(values);
        self.dones.extend_from_slice(dones);
        self.len += 1;
    }
}

/// Advantages and returns (time-major, like the buffer).
///
/// `δ_t = r_t + γ·V_{t+1}·(1 − done_t) − V_t`, `A_t = δ_t + γλ·(1 − done_t)·A_{t+1}`,
/// with `V_T` taken from `bootstrap`.
pub fn compute_gae(buffer: &RolloutBuffer, bootstrap: &[f64], gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = buffer.n_envs;
    let t_len = buffer.len;
    assert_eq!(bootstrap.len(), n, "one bootstrap value per environment");
    let mut adv = vec![0.0; n * t_len];
    for e in 0..n {
        let mut next_value = bootstrap[e];
        let mut next_adv = 0.0;
        for t in (0..t_len).rev() {
            let k = t * n + e;
            let live = if buffer.dones[k] { 0.0 } else { 1.0 };
            let delta = buffer.rewards[k] + gamma * next_value * live - buffer.values[k];
            next_adv = delta + gamma * lambda * live * next_adv;
            adv[k] = next_adv;
            next_value = buffer.values[k];
        }
    }
    let ret = adv.iter().zip(&buffer.values).map(|(a, v)| a + v).collect();
    (adv, ret)
}

/// Shifts and scales to zero mean and unit variance (σ floored at 1e-8).
pub fn normalize(xs: &mut [f64]) {
    if xs.is_empty() {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt().max(1e-8);
    for x in xs {
        *x = (*x - mean) / sd;
    }
}
