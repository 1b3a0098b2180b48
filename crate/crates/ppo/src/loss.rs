//! Clipped surrogate loss with value and entropy terms, and its exact gradient.

use auv_core::env::ACT_DIM;
use ndarray::Array2;
use serde::Serialize;

use crate::mlp::{backward, OutputActivation, Real};
use crate::policy::PolicyParams;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Samples for one gradient step. Network inputs use the network precision,
/// per-sample scalars stay in `f64`.
#[derive(Debug, Clone)]
pub struct MiniBatch<T> {
    pub obs: Array2<T>,
    /// Pre-clamp actions, one row per sample.
    pub actions: Array2<T>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    /// Rollout policy distribution; enables the analytic KL statistic.
    pub old_policy: Option<OldPolicy<T>>,
}

#[derive(Debug, Clone)]
pub struct OldPolicy<T> {
    pub mean: Array2<T>,
    pub log_std: [f64; ACT_DIM],
}

impl<T> MiniBatch<T> {
    pub fn len(&self) -> usize {
        self.old_log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.old_log_probs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoefficients {
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LossStats {
    pub total: f64,
    /// Clipped surrogate, already negated.
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    /// Fraction of samples with `|ρ − 1| > ε`.
    pub clip_frac: f64,
    pub mean_ratio: f64,
    pub approx_kl: f64,
    /// Mean `KL(old ‖ current)` of the Gaussians; zero without an old policy.
    pub policy_kl: f64,
}

/// `L = −mean(min(ρA, clip(ρ, 1−ε, 1+ε)·A)) + c_v·mean((V − R)²) − c_e·H`.
///
/// When `grad` is given it is overwritten with `∂L/∂θ`.
pub fn ppo_loss<T: Real>(
    params: &PolicyParams<T>,
    batch: &MiniBatch<T>,
    coefs: &LossCoefficients,
    grad: Option<&mut [T]>,
) -> LossStats {
    let b = batch.len();
    let inv_b = 1.0 / b as f64;
    let eval = params.evaluate(batch.obs.view());
    let mean = eval.mean();
    let value = eval.value();
    let log_std: [f64; ACT_DIM] = std::array::from_fn(|j| params.log_std()[j].f64());
    let inv_var: [f64; ACT_DIM] = log_std.map(|s| (-2.0 * s).exp());

    let mut d_mean = Array2::<T>::zeros((b, ACT_DIM));
    let mut d_value = Array2::<T>::zeros((b, 1));
    let mut d_log_std = [-coefs.entropy_coef; ACT_DIM];
    let (mut pol, mut val, mut clipped, mut ratio_sum, mut kl) = (0.0, 0.0, 0usize, 0.0, 0.0);
    let (lo, hi) = (1.0 - coefs.clip, 1.0 + coefs.clip);

    for i in 0..b {
        let mut logp = 0.0;
        for j in 0..ACT_DIM {
            let d = batch.actions[[i, j]].f64() - mean[[i, j]].f64();
            logp += -0.5 * (d * d * inv_var[j] + LN_2PI) - log_std[j];
        }
        let log_ratio = logp - batch.old_log_probs[i];
        let ratio = log_ratio.exp();
        let a = batch.advantages[i];
        let unclipped = ratio * a;
        let clipped_term = ratio.clamp(lo, hi) * a;
        pol -= unclipped.min(clipped_term);
        if (ratio - 1.0).abs() > coefs.clip {
            clipped += 1;
        }
        ratio_sum += ratio;
        kl += (ratio - 1.0) - log_ratio;
        // gradient passes only where the unclipped branch is selected
        let g_logp = if unclipped <= clipped_term { -a * ratio * inv_b } else { 0.0 };
        if g_logp != 0.0 {
            for j in 0..ACT_DIM {
                let d = batch.actions[[i, j]].f64() - mean[[i, j]].f64();
                d_mean[[i, j]] = T::of(g_logp * d * inv_var[j]);
                d_log_std[j] += g_logp * (d * d * inv_var[j] - 1.0);
            }
        }
        let e = value[i].f64() - batch.returns[i];
        val += e * e;
        d_value[[i, 0]] = T::of(2.0 * coefs.value_coef * e * inv_b);
    }
    let policy_kl = batch.old_policy.as_ref().map_or(0.0, |old| {
        let mut acc = 0.0;
        for i in 0..b {
            for j in 0..ACT_DIM {
                let d = old.mean[[i, j]].f64() - mean[[i, j]].f64();
                acc += log_std[j] - old.log_std[j] + 0.5 * ((2.0 * old.log_std[j]).exp() + d * d) * inv_var[j] - 0.5;
            }
        }
        acc * inv_b
    });
    let entropy: f64 = log_std.iter().map(|s| 0.5 + 0.5 * LN_2PI + s).sum();
    let stats = LossStats {
        total: pol * inv_b + coefs.value_coef * val * inv_b - coefs.entropy_coef * entropy,
        policy: pol * inv_b,
        value: val * inv_b,
        entropy,
        clip_frac: clipped as f64 * inv_b,
        mean_ratio: ratio_sum * inv_b,
        approx_kl: kl * inv_b,
        policy_kl,
    };
    if let Some(grad) = grad {
        grad.fill(T::zero());
        let layout = params.layout();
        backward(&layout.actor, params.theta(), &eval.actor, d_mean, OutputActivation::Tanh, grad);
        backward(&layout.critic, params.theta(), &eval.critic, d_value, OutputActivation::Identity, grad);
        for (g, d) in grad[layout.log_std..].iter_mut().zip(d_log_std) {
            *g = T::of(d);
        }
    }
    stats
}
