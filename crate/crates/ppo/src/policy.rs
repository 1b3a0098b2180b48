//! Actor-critic parameters, deterministic forward pass and Gaussian action sampling.

use auv_core::env::{ACT_DIM, OBS_DIM};
use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::mlp::{forward, layout_layers, LayerSpan, OutputActivation, Real, Trace};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PolicyError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Hidden-layer widths of the two networks; input and output widths are fixed
/// by the environment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Self { actor_hidden: vec![128, 128], critic_hidden: vec![128, 128] }
    }
}

/// Where every parameter block lives in the flat vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub actor: Vec<LayerSpan>,
    pub critic: Vec<LayerSpan>,
    pub log_std: usize,
    pub len: usize,
}

impl Architecture {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.actor_hidden.is_empty() || self.critic_hidden.is_empty() {
            return Err(PolicyError::InvalidArgument("both networks need at least one hidden layer".into()));
        }
        if self.actor_hidden.iter().chain(&self.critic_hidden).any(|&h| h == 0) {
            return Err(PolicyError::InvalidArgument("hidden widths must be positive".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        let mut off = 0;
        let sizes = |hidden: &[usize], out: usize| {
            let mut s = vec![OBS_DIM];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        let actor = layout_layers(&sizes(&self.actor_hidden, ACT_DIM), &mut off);
        let critic = layout_layers(&sizes(&self.critic_hidden, 1), &mut off);
        Layout { actor, critic, log_std: off, len: off + ACT_DIM }
    }
}

/// Actor and critic weights plus the state-independent action log-std, in one
/// flat vector: actor layers, critic layers, then log-std.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams<T> {
    arch: Architecture,
    layout: Layout,
    theta: Vec<T>,
}

/// Stored precision of a trained policy.
pub type PolicySnapshot = PolicyParams<f32>;

/// Batched network outputs.
pub struct Evaluation<T> {
    pub actor: Trace<T>,
    pub critic: Trace<T>,
}

impl<T> Evaluation<T> {
    pub fn mean(&self) -> &Array2<T> {
        &self.actor.output
    }

    pub fn value(&self) -> ndarray::ArrayView1<'_, T> {
        self.critic.output.column(0)
    }
}

impl<T: Real> PolicyParams<T> {
    pub fn zeros(arch: Architecture) -> Result<Self, PolicyError> {
        arch.validate()?;
        let layout = arch.layout();
        let theta = vec![T::zero(); layout.len];
        Ok(Self { arch, layout, theta })
    }

    pub fn from_parts(arch: Architecture, theta: Vec<T>) -> Result<Self, PolicyError> {
        arch.validate()?;
        let layout = arch.layout();
        if theta.len() != layout.len {
            return Err(PolicyError::InvalidArgument(format!(
                "expected {} parameters, got {}",
                layout.len,
                theta.len()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(PolicyError::InvalidArgument("non-finite parameter".into()));
        }
        Ok(Self { arch, layout, theta })
    }

    /// Uniform fan-in initialization; the actor output layer is shrunk so initial
    /// means start near zero. Log-std starts at `log_std`.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, log_std: f64, rng: &mut R) -> Result<Self, PolicyError> {
        let mut p = Self::zeros(arch)?;
        let n_actor = p.layout.actor.len();
        let layers: Vec<(LayerSpan, f64)> = p
            .layout
            .actor
            .iter()
            .enumerate()
            .map(|(k, l)| (*l, if k + 1 == n_actor { 0.01 } else { 1.0 }))
            .chain(p.layout.critic.iter().map(|l| (*l, 1.0)))
            .collect();
        for (l, scale) in layers {
            let bound = 1.0 / (l.inputs as f64).sqrt();
            for v in &mut p.theta[l.weight..l.bias + l.outputs] {
                *v = T::of(scale * rng.random_range(-bound..bound));
            }
        }
        let ls = p.layout.log_std;
        p.theta[ls..].fill(T::of(log_std));
        Ok(p)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [T] {
        &mut self.theta
    }

    pub fn log_std(&self) -> &[T] {
        &self.theta[self.layout.log_std..]
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|v| v.is_finite())
    }

    /// Forward pass over a batch of observations (one per row).
    pub fn evaluate(&self, obs: ArrayView2<T>) -> Evaluation<T> {
        Evaluation {
            actor: forward(&self.layout.actor, &self.theta, obs, OutputActivation::Tanh),
            critic: forward(&self.layout.critic, &self.theta, obs, OutputActivation::Identity),
        }
    }

    /// Actor means and values for a batch.
    pub fn forward_batch(&self, obs: ArrayView2<T>) -> (Array2<T>, Array1<T>) {
        let e = self.evaluate(obs);
        let v = e.value().to_owned();
        (e.actor.output, v)
    }

    pub fn cast<U: Real>(&self) -> PolicyParams<U> {
        PolicyParams {
            arch: self.arch.clone(),
            layout: self.layout.clone(),
            theta: self.theta.iter().map(|v| U::of(v.f64())).collect(),
        }
    }
}

/// Converts rows of `f64` observations to a batch matrix.
pub fn obs_matrix<T: Real>(rows: &[[f64; OBS_DIM]]) -> Array2<T> {
    Array2::from_shape_fn((rows.len(), OBS_DIM), |(i, j)| T::of(rows[i][j]))
}

/// Tanh-squashed action mean and value for one observation.
pub fn policy_forward<T: Real>(params: &PolicyParams<T>, obs: &[f64]) -> Result<([f64; ACT_DIM], f64), PolicyError> {
    if obs.len() != OBS_DIM {
        return Err(PolicyError::InvalidArgument(format!("observation has {} entries, expected {OBS_DIM}", obs.len())));
    }
    let x = Array2::from_shape_fn((1, OBS_DIM), |(_, j)| T::of(obs[j]));
    let (mean, value) = params.forward_batch(x.view());
    Ok((std::array::from_fn(|j| mean[[0, j]].f64()), value[0].f64()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample {
    /// Gaussian draw before clamping; the log-probability refers to this.
    pub raw: [f64; ACT_DIM],
    pub action: [f64; ACT_DIM],
    pub log_prob: f64,
}

/// Log-density of a diagonal Gaussian.
pub fn gaussian_log_prob(x: &[f64; ACT_DIM], mean: &[f64; ACT_DIM], log_std: &[f64; ACT_DIM]) -> f64 {
    (0..ACT_DIM)
        .map(|j| {
            let z = (x[j] - mean[j]) * (-log_std[j]).exp();
            -0.5 * (z * z + LN_2PI) - log_std[j]
        })
        .sum()
}

/// Draws `mean + σ·ξ`, clamps it to the action box and scores the raw draw.
pub fn sample_action<R: Rng + ?Sized>(mean: &[f64; ACT_DIM], log_std: &[f64; ACT_DIM], rng: &mut R) -> ActionSample {
    let mut raw = [0.0; ACT_DIM];
    let mut log_prob = 0.0;
    for j in 0..ACT_DIM {
        let xi: f64 = rng.sample(StandardNormal);
        raw[j] = mean[j] + log_std[j].exp() * xi;
        log_prob += -0.5 * (xi * xi + LN_2PI) - log_std[j];
    }
    ActionSample { raw, action: raw.map(|a| a.clamp(-1.0, 1.0)), log_prob }
}
