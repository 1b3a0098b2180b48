//! Vectorized training environment.
//!
//! `N` independent vehicles are stepped in lockstep. Each environment owns its
//! state, randomized parameters, reference generator, integral accumulators and a
//! private random stream, so results are identical for any worker count.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{BodyState, DynamicsError, VehicleModel, VehicleParams, MAX_DT};
use crate::reference::{sample_uniform_rotation, EpisodeReference, ReferenceState, TrajectoryParams};
use crate::rng::{stream, StreamDomain, StreamRng};
use crate::so3::{quat_error, UnitQuat, Vec3};

pub const OBS_DIM: usize = 16;
pub const ACT_DIM: usize = 6;

const PARAM_RETRIES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub w_q: f64,
    pub w_omega: f64,
    pub w_v: f64,
    pub w_a: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { w_q: 0.4, w_omega: 0.05, w_v: 0.2, w_a: 0.3 }
    }
}

impl RewardWeights {
    /// Largest per-step reward (all errors, rates and actions zero).
    pub fn max_reward(&self) -> f64 {
        self.w_q + self.w_omega + self.w_v + self.w_a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizationSpec {
    pub mass_factor_range: [f64; 2],
    pub buoyancy_factor_range: [f64; 2],
    pub cb_offset_radius_m: f64,
}

impl Default for RandomizationSpec {
    fn default() -> Self {
        Self {
            mass_factor_range: [0.90, 1.10],
            buoyancy_factor_range: [0.95, 1.05],
            cb_offset_radius_m: 0.02,
        }
    }
}

impl RandomizationSpec {
    pub fn none() -> Self {
        Self {
            mass_factor_range: [1.0, 1.0],
            buoyancy_factor_range: [1.0, 1.0],
            cb_offset_radius_m: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, [lo, hi]) in [("mass_factor_range", self.mass_factor_range), ("buoyancy_factor_range", self.buoyancy_factor_range)] {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
                return Err(format!("{name} must satisfy 0 < lo <= hi, got [{lo}, {hi}]"));
            }
        }
        if !(self.cb_offset_radius_m >= 0.0 && self.cb_offset_radius_m.is_finite()) {
            return Err("cb_offset_radius_m must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub n_envs: usize,
    pub dt_physics_s: f64,
    pub control_decimation: usize,
    pub episode_length_s: f64,
    /// Anti-windup bound on every integral component.
    pub z_max: f64,
    /// Divergence guard on every component of `ν`.
    pub nu_max: f64,
    pub velocity_ref_speed_m_s: f64,
    pub reward: RewardWeights,
    pub randomization: RandomizationSpec,
    pub trajectory: TrajectoryParams,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            n_envs: 2048,
            dt_physics_s: 0.01,
            control_decimation: 2,
            episode_length_s: 5.0,
            z_max: 1.0,
            nu_max: 5.0,
            velocity_ref_speed_m_s: 0.5,
            reward: RewardWeights::default(),
            randomization: RandomizationSpec::default(),
            trajectory: TrajectoryParams::default(),
        }
    }
}

impl EnvConfig {
    pub fn dt_control(&self) -> f64 {
        self.dt_physics_s * self.control_decimation as f64
    }

    pub fn episode_steps(&self) -> u32 {
        (self.episode_length_s / self.dt_control()).round().max(1.0) as u32
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::InvalidConfig(m));
        if self.n_envs == 0 {
            return bad("n_envs must be at least 1".into());
        }
        if !(self.dt_physics_s > 0.0 && self.dt_physics_s <= MAX_DT) {
            return bad(format!("dt_physics_s must be in (0, {MAX_DT}]"));
        }
        if self.control_decimation == 0 {
            return bad("control_decimation must be at least 1".into());
        }
        if !(self.episode_length_s > 0.0 && self.episode_length_s.is_finite()) {
            return bad("episode_length_s must be positive".into());
        }
        if !(self.z_max > 0.0 && self.nu_max > 0.0 && self.velocity_ref_speed_m_s >= 0.0) {
            return bad("z_max and nu_max must be positive, velocity_ref_speed_m_s non-negative".into());
        }
        let w = &self.reward;
        if ![w.w_q, w.w_omega, w.w_v, w.w_a].iter().all(|x| x.is_finite() && *x >= 0.0) {
            return bad("reward weights must be finite and non-negative".into());
        }
        self.randomization.validate().map_err(EnvError::InvalidConfig)?;
        self.trajectory.validate().map_err(EnvError::InvalidConfig)?;
        Ok(())
    }
}

/// `[q_e (4), v_e (3), ω (3), z_v (3), z_q (3)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Default for Observation {
    fn default() -> Self {
        let mut o = [0.0; OBS_DIM];
        o[0] = 1.0;
        Self(o)
    }
}

impl Observation {
    fn vec3(&self, at: usize) -> Vec3 {
        Vec3::new(self.0[at], self.0[at + 1], self.0[at + 2])
    }

    pub fn q_e(&self) -> [f64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    pub fn v_e(&self) -> Vec3 {
        self.vec3(4)
    }

    pub fn omega(&self) -> Vec3 {
        self.vec3(7)
    }

    pub fn z_v(&self) -> Vec3 {
        self.vec3(10)
    }

    pub fn z_q(&self) -> Vec3 {
        self.vec3(13)
    }

    /// Geodesic attitude error encoded in `q_e`.
    pub fn attitude_error(&self) -> f64 {
        let [w, x, y, z] = self.q_e();
        2.0 * (x * x + y * y + z * z).sqrt().atan2(w.abs())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Integral states of the velocity error and of the quaternion-error vector part.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Integrals {
    pub z_v: Vec3,
    pub z_q: Vec3,
}

impl Integrals {
    pub fn accumulate(&mut self, v_e: Vec3, q_e: UnitQuat, dt: f64, z_max: f64) {
        let clamp = |x: f64| x.clamp(-z_max, z_max);
        self.z_v = (self.z_v + v_e * dt).map(clamp);
        self.z_q = (self.z_q + q_e.vector() * dt).map(clamp);
    }
}

pub fn observe(state: &BodyState, reference: &ReferenceState, z_v: Vec3, z_q: Vec3) -> Observation {
    let q_e = quat_error(reference.q_d, state.q).coords();
    let v_e = state.v - reference.v_d;
    let mut o = [0.0; OBS_DIM];
    o[..4].copy_from_slice(&q_e);
    o[4..7].copy_from_slice(&v_e.to_array());
    o[7..10].copy_from_slice(&state.omega.to_array());
    o[10..13].copy_from_slice(&z_v.to_array());
    o[13..16].copy_from_slice(&z_q.to_array());
    Observation(o)
}

/// `w_v·e^{−|v_e|²} + w_ω·e^{−|ω|²} + w_q·e^{−θ_e} + w_a·e^{−|a|}`.
pub fn reward(obs: &Observation, a: &[f64; ACT_DIM], w: &RewardWeights) -> f64 {
    let a_norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    w.w_v * (-obs.v_e().norm_squared()).exp()
        + w.w_omega * (-obs.omega().norm_squared()).exp()
        + w.w_q * (-obs.attitude_error()).exp()
        + w.w_a * (-a_norm).exp()
}

/// Uniform point in the ball of radius `radius`.
pub fn sample_in_ball<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Vec3 {
    if radius == 0.0 {
        return Vec3::ZERO;
    }
    let dir = loop {
        let g = Vec3::new(StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng));
        if let Some(d) = g.try_normalize(1e-12) {
            break d;
        }
    };
    dir * (radius * rng.random::<f64>().cbrt())
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        lo + (hi - lo) * rng.random::<f64>()
    }
}

/// Per-episode parameter draw: mass (with weight and inertia) and buoyancy scaled by
/// uniform factors, CB displaced by a uniform point in a ball.
pub fn randomize_params<R: Rng + ?Sized>(
    base: &VehicleParams,
    spec: &RandomizationSpec,
    rng: &mut R,
) -> Result<VehicleParams, EnvError> {
    let mut last_err = None;
    for _ in 0..PARAM_RETRIES {
        let mass_factor = uniform(rng, spec.mass_factor_range);
        let buoyancy_factor = uniform(rng, spec.buoyancy_factor_range);
        let offset = sample_in_ball(rng, spec.cb_offset_radius_m);
        let mut p = base.clone();
        p.mass_kg *= mass_factor;
        p.weight_n *= mass_factor;
        p.inertia_kg_m2 = p.inertia_kg_m2.map(|row| row.map(|x| x * mass_factor));
        p.buoyancy_n *= buoyancy_factor;
        p.r_cb_m += offset;
        match crate::dynamics::mass_matrix(&p) {
            Ok(_) => return Ok(p),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.map(EnvError::from).unwrap_or_else(|| EnvError::InvalidConfig("parameter sampling failed".into())))
}

#[derive(Debug, Clone)]
struct EnvSlot {
    state: BodyState,
    model: VehicleModel,
    reference: EpisodeReference,
    current_ref: ReferenceState,
    integrals: Integrals,
    step: u32,
    rng: StreamRng,
    obs: Observation,
}

#[derive(Debug, Clone, Copy, Default)]
struct SlotOutcome {
    reward: f64,
    done: bool,
    truncated: bool,
    saturated: bool,
}

impl EnvSlot {
    fn new(cfg: &EnvConfig, base: &VehicleParams, seed: u64, index: usize) -> Result<Self, EnvError> {
        let rng = stream(seed, StreamDomain::Env, index as u64);
        let reference = EpisodeReference::new(Vec3::ZERO, cfg.trajectory, UnitQuat::IDENTITY);
        let mut slot = Self {
            state: BodyState::default(),
            model: VehicleModel::new(base.clone())?,
            current_ref: ReferenceState { v_d: Vec3::ZERO, q_d: UnitQuat::IDENTITY },
            reference,
            integrals: Integrals::default(),
            step: 0,
            rng,
            obs: Observation::default(),
        };
        slot.reset(cfg, base, false)?;
        Ok(slot)
    }

    fn reset(&mut self, cfg: &EnvConfig, base: &VehicleParams, random_clock: bool) -> Result<(), EnvError> {
        let params = randomize_params(base, &cfg.randomization, &mut self.rng)?;
        self.model = VehicleModel::new(params)?;
        self.reference = EpisodeReference::sample(&mut self.rng, &cfg.trajectory, cfg.velocity_ref_speed_m_s);
        self.state = BodyState {
            q: sample_uniform_rotation(&mut self.rng),
            ..BodyState::default()
        };
        self.integrals = Integrals::default();
        self.step = if random_clock { self.rng.random_range(0..cfg.episode_steps()) } else { 0 };
        self.current_ref = self.reference.at(self.step as f64 * cfg.dt_control());
        self.obs = observe(&self.state, &self.current_ref, Vec3::ZERO, Vec3::ZERO);
        Ok(())
    }

    fn step(&mut self, cfg: &EnvConfig, action: &[f64; ACT_DIM]) -> SlotOutcome {
        let mut state = self.state;
        let mut saturated = false;
        let mut diverged = false;
        for _ in 0..cfg.control_decimation {
            match self.model.step(&state, action, cfg.dt_physics_s) {
                Ok((next, sat)) => {
                    state = next;
                    saturated |= sat;
                }
                Err(_) => {
                    diverged = true;
                    break;
                }
            }
        }
        let nu = state.nu();
        diverged |= !state.is_finite() || nu.iter().any(|x| x.abs() > cfg.nu_max);
        self.state = state;
        self.step += 1;
        let t = self.step as f64 * cfg.dt_control();
        self.current_ref = self.reference.at(t);

        let clamped = action.map(|a| if a.is_nan() { 0.0 } else { a.clamp(-1.0, 1.0) });
        if diverged {
            let mut o = observe(&state, &self.current_ref, self.integrals.z_v, self.integrals.z_q).0;
            o.iter_mut().filter(|x| !x.is_finite()).for_each(|x| *x = 0.0);
            self.obs = Observation(o);
            let r = reward(&self.obs, &clamped, &cfg.reward);
            return SlotOutcome { reward: if r.is_finite() { r } else { 0.0 }, done: true, truncated: false, saturated };
        }
        let q_e = quat_error(self.current_ref.q_d, state.q);
        let v_e = state.v - self.current_ref.v_d;
        self.integrals.accumulate(v_e, q_e, cfg.dt_control(), cfg.z_max);
        self.obs = observe(&state, &self.current_ref, self.integrals.z_v, self.integrals.z_q);
        let truncated = self.step >= cfg.episode_steps();
        SlotOutcome {
            reward: reward(&self.obs, &clamped, &cfg.reward),
            done: truncated,
            truncated,
            saturated,
        }
    }
}

/// Output of one lockstep batch step, in environment order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepResult {
    /// Post-step observations (terminal observations for environments that finished).
    pub obs: Vec<Observation>,
    pub rewards: Vec<f64>,
    /// Episode ended (time limit or divergence).
    pub dones: Vec<bool>,
    /// Episode ended on the time limit rather than divergence.
    pub truncated: Vec<bool>,
    /// Some action component had to be clamped into `[−1, 1]`.
    pub saturated: Vec<bool>,
}

impl StepResult {
    pub fn diverged_count(&self) -> usize {
        self.dones.iter().zip(&self.truncated).filter(|(d, t)| **d && !**t).count()
    }
}

pub struct EnvBatch {
    cfg: EnvConfig,
    base: VehicleParams,
    slots: Vec<EnvSlot>,
    pool: Option<Arc<ThreadPool>>,
}

impl EnvBatch {
    /// Builds `cfg.n_envs` environments with independent streams derived from `seed`,
    /// all reset with the episode clock at zero.
    pub fn new(cfg: EnvConfig, base: VehicleParams, seed: u64) -> Result<Self, EnvError> {
        cfg.validate()?;
        base.validate()?;
        let slots = (0..cfg.n_envs)
            .into_par_iter()
            .map(|i| EnvSlot::new(&cfg, &base, seed, i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { cfg, base, slots, pool: None })
    }

    /// Runs batch work on a dedicated pool instead of the global one.
    pub fn with_thread_pool(mut self, pool: Arc<ThreadPool>) -> Self {
        self.pool = Some(pool);
        self
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn n_envs(&self) -> usize {
        self.slots.len()
    }

    pub fn observations(&self) -> Vec<Observation> {
        self.slots.iter().map(|s| s.obs).collect()
    }

    pub fn states(&self) -> Vec<BodyState> {
        self.slots.iter().map(|s| s.state).collect()
    }

    pub fn params(&self, env: usize) -> Option<&VehicleParams> {
        self.slots.get(env).map(|s| s.model.params())
    }

    pub fn reference(&self, env: usize) -> Option<ReferenceState> {
        self.slots.get(env).map(|s| s.current_ref)
    }

    pub fn integrals(&self, env: usize) -> Option<Integrals> {
        self.slots.get(env).map(|s| s.integrals)
    }

    /// Episode clock in seconds.
    pub fn time(&self, env: usize) -> Option<f64> {
        self.slots.get(env).map(|s| s.step as f64 * self.cfg.dt_control())
    }

    fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    /// Steps every environment once at the control rate.
    pub fn step_into(&mut self, actions: &[[f64; ACT_DIM]], out: &mut StepResult) -> Result<(), EnvError> {
        if actions.len() != self.slots.len() {
            return Err(EnvError::InvalidArgument(format!(
                "expected {} actions, got {}",
                self.slots.len(),
                actions.len()
            )));
        }
        let cfg = &self.cfg;
        let mut slots = std::mem::take(&mut self.slots);
        let outcomes: Vec<(SlotOutcome, Observation)> = self.run(|| {
            slots
                .par_iter_mut()
                .with_min_len(32)
                .zip(actions.par_iter())
                .map(|(slot, a)| {
                    let o = slot.step(cfg, a);
                    (o, slot.obs)
                })
                .collect()
        });
        self.slots = slots;
        out.obs.clear();
        out.rewards.clear();
        out.dones.clear();
        out.truncated.clear();
        out.saturated.clear();
        for (o, obs) in outcomes {
            out.obs.push(obs);
            out.rewards.push(o.reward);
            out.dones.push(o.done);
            out.truncated.push(o.truncated);
            out.saturated.push(o.saturated);
        }
        Ok(())
    }

    pub fn step_batch(&mut self, actions: &[[f64; ACT_DIM]]) -> Result<StepResult, EnvError> {
        let mut out = StepResult::default();
        self.step_into(actions, &mut out)?;
        Ok(out)
    }

    /// Fresh parameters, references, attitude and zero integrals for the given environments.
    pub fn reset_envs(&mut self, indices: &[usize]) -> Result<Vec<Observation>, EnvError> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.slots.len()) {
            return Err(EnvError::InvalidArgument(format!("env index {bad} out of range")));
        }
        let mut out = Vec::with_capacity(indices.len());
        for &i in indices {
            self.slots[i].reset(&self.cfg, &self.base, false)?;
            out.push(self.slots[i].obs);
        }
        Ok(out)
    }

    /// Resets every environment; with `random_clock` each episode clock starts at a
    /// random step so episode ends are spread over time.
    pub fn reset_all(&mut self, random_clock: bool) -> Result<Vec<Observation>, EnvError> {
        let (cfg, base) = (&self.cfg, &self.base);
        let mut slots = std::mem::take(&mut self.slots);
        let res = self.run(|| {
            slots
                .par_iter_mut()
                .try_for_each(|s| s.reset(cfg, base, random_clock))
        });
        self.slots = slots;
        res?;
        Ok(self.observations())
    }
}
