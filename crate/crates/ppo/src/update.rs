//! PPO hyperparameters and the minibatch update over one rollout.

use auv_core::env::{ACT_DIM, OBS_DIM};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adam::{clip_grad_norm, Adam};
use crate::buffer::{normalize, RolloutBuffer};
use crate::loss::{ppo_loss, LossCoefficients, LossStats, MiniBatch, OldPolicy};
use crate::policy::{Architecture, PolicySnapshot};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PpoError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss in epoch {epoch}, minibatch {minibatch}: {stats:?}")]
    NonFiniteLoss { epoch: usize, minibatch: usize, stats: LossStats },
    #[error("non-finite parameters after epoch {epoch}, minibatch {minibatch}")]
    NonFiniteParams { epoch: usize, minibatch: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    Fixed,
    /// After each minibatch the step size is divided by 1.5 when the KL to the
    /// rollout policy exceeds `2·desired_kl` and multiplied by 1.5 when it is
    /// below `desired_kl/2`, within [1e-5, 1e-2].
    Adaptive,
}

pub const ADAPTIVE_LR_RANGE: (f64, f64) = (1e-5, 1e-2);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub desired_kl: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub horizon: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub iterations: usize,
    /// Write a checkpoint every this many iterations (0: final only).
    pub checkpoint_every: usize,
    pub init_log_std: f64,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            learning_rate: 1e-3,
            schedule: LrSchedule::Fixed,
            desired_kl: 0.01,
            epochs: 5,
            minibatches: 4,
            horizon: 24,
            entropy_coef: 0.005,
            value_coef: 1.0,
            max_grad_norm: 1.0,
            iterations: 300,
            checkpoint_every: 50,
            init_log_std: 0.0,
            actor_hidden: vec![128, 128],
            critic_hidden: vec![128, 128],
        }
    }
}

impl PpoConfig {
    pub fn architecture(&self) -> Architecture {
        Architecture { actor_hidden: self.actor_hidden.clone(), critic_hidden: self.critic_hidden.clone() }
    }

    pub fn coefficients(&self) -> LossCoefficients {
        LossCoefficients { clip: self.clip, value_coef: self.value_coef, entropy_coef: self.entropy_coef }
    }

    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: &str| Err(PpoError::InvalidConfig(m.into()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("lambda must be in (0, 1]");
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip must be in (0, 1)");
        }
        if self.horizon == 0 || self.epochs == 0 || self.minibatches == 0 {
            return bad("horizon, epochs and minibatches must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.max_grad_norm > 0.0) {
            return bad("learning rate and max grad norm must be positive");
        }
        if self.schedule == LrSchedule::Adaptive && !(self.desired_kl > 0.0 && self.desired_kl.is_finite()) {
            return bad("desired_kl must be positive");
        }
        if !(self.entropy_coef >= 0.0 && self.value_coef >= 0.0 && self.init_log_std.is_finite()) {
            return bad("loss coefficients must be non-negative");
        }
        self.architecture().validate().map_err(|e| PpoError::InvalidConfig(e.to_string()))
    }
}

/// Averages over all gradient steps of one update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct UpdateStats {
    pub loss: LossStats,
    pub grad_norm: f64,
    /// Largest `|mean ratio − 1|` seen in the first epoch; stays below `2ε`
    /// for a well-behaved update.
    pub first_epoch_ratio_dev: f64,
    /// Step size after the update.
    pub learning_rate: f64,
    pub steps: usize,
}

fn gather(
    buffer: &RolloutBuffer,
    adv: &[f64],
    ret: &[f64],
    old: Option<(&Array2<f32>, [f64; ACT_DIM])>,
    idx: &[usize],
) -> MiniBatch<f32> {
    MiniBatch {
        obs: Array2::from_shape_fn((idx.len(), OBS_DIM), |(i, j)| buffer.obs[idx[i]][j] as f32),
        actions: Array2::from_shape_fn((idx.len(), ACT_DIM), |(i, j)| buffer.actions[idx[i]][j] as f32),
        old_log_probs: idx.iter().map(|&k| buffer.log_probs[k]).collect(),
        advantages: idx.iter().map(|&k| adv[k]).collect(),
        returns: idx.iter().map(|&k| ret[k]).collect(),
        old_policy: old.map(|(mean, log_std)| OldPolicy {
            mean: Array2::from_shape_fn((idx.len(), ACT_DIM), |(i, j)| mean[[idx[i], j]]),
            log_std,
        }),
    }
}

/// Several epochs of shuffled minibatch steps on the clipped loss. Advantages
/// are normalized over the whole rollout first. `params` must be the policy
/// that collected `buffer`. On a non-finite loss or parameter the policy is
/// restored and an error returned.
pub fn ppo_update<R: Rng + ?Sized>(
    params: &mut PolicySnapshot,
    opt: &mut Adam,
    buffer: &RolloutBuffer,
    advantages: &[f64],
    returns: &[f64],
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats, PpoError> {
    let n = buffer.obs.len();
    assert_eq!(advantages.len(), n);
    assert_eq!(returns.len(), n);
    let mut adv = advantages.to_vec();
    normalize(&mut adv);
    let coefs = cfg.coefficients();
    let backup = params.clone();
    let mut grad = vec![0f32; params.theta().len()];
    let mut order: Vec<usize> = (0..n).collect();
    let mb = n.div_ceil(cfg.minibatches);
    let adaptive = cfg.schedule == LrSchedule::Adaptive;
    let old_mean = adaptive.then(|| {
        let obs = Array2::from_shape_fn((n, OBS_DIM), |(i, j)| buffer.obs[i][j] as f32);
        params.forward_batch(obs.view()).0
    });
    let old_log_std: [f64; ACT_DIM] = std::array::from_fn(|j| params.log_std()[j] as f64);
    let mut acc = UpdateStats::default();
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        for (k, idx) in order.chunks(mb).enumerate() {
            let batch = gather(buffer, &adv, returns, old_mean.as_ref().map(|m| (m, old_log_std)), idx);
            let s = ppo_loss(params, &batch, &coefs, Some(&mut grad));
            if !s.total.is_finite() {
                *params = backup;
                return Err(PpoError::NonFiniteLoss { epoch, minibatch: k, stats: s });
            }
            if adaptive {
                let (lo, hi) = ADAPTIVE_LR_RANGE;
                if s.policy_kl > 2.0 * cfg.desired_kl {
                    opt.lr = (opt.lr / 1.5).max(lo);
                } else if s.policy_kl > 0.0 && s.policy_kl < 0.5 * cfg.desired_kl {
                    opt.lr = (opt.lr * 1.5).min(hi);
                }
            }
            acc.grad_norm += clip_grad_norm(&mut grad, cfg.max_grad_norm);
            opt.step(params.theta_mut(), &grad);
            if !params.is_finite() {
                *params = backup;
                return Err(PpoError::NonFiniteParams { epoch, minibatch: k });
            }
            if epoch == 0 {
                acc.first_epoch_ratio_dev = acc.first_epoch_ratio_dev.max((s.mean_ratio - 1.0).abs());
            }
            acc.loss.total += s.total;
            acc.loss.policy += s.policy;
            acc.loss.value += s.value;
            acc.loss.entropy += s.entropy;
            acc.loss.clip_frac += s.clip_frac;
            acc.loss.mean_ratio += s.mean_ratio;
            acc.loss.approx_kl += s.approx_kl;
            acc.loss.policy_kl += s.policy_kl;
            acc.steps += 1;
        }
    }
    let d = acc.steps.max(1) as f64;
    let l = &mut acc.loss;
    for x in [&mut l.total, &mut l.policy, &mut l.value, &mut l.entropy, &mut l.clip_frac, &mut l.mean_ratio, &mut l.approx_kl, &mut l.policy_kl] {
        *x /= d;
    }
    acc.grad_norm /= d;
    acc.learning_rate = opt.lr;
    Ok(acc)
}
