//! Desired-state generation for training episodes.
//!
//! Each episode draws one constant body-velocity reference of fixed speed with a
//! uniformly random direction, and a time-varying attitude reference given by the
//! Frenet–Serret frame of the curve whose velocity is
//! `v(t) = [a, b·sin(ωt), c·cos(ωt)]`.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::so3::{hamilton_product, UnitQuat, Vec3};

/// Threshold on `|T'|` below which the curve is treated as locally straight.
const DEGENERATE_CURVATURE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryParams {
    /// Velocity coefficients `[a, b, c]` in m/s.
    pub coefficients_m_s: [f64; 3],
    pub frequency_rad_s: f64,
    pub phase_rad: f64,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            coefficients_m_s: [0.5, 0.5, 0.3],
            frequency_rad_s: 0.2,
            phase_rad: 0.0,
        }
    }
}

impl TrajectoryParams {
    pub fn validate(&self) -> Result<(), String> {
        let [a, b, c] = self.coefficients_m_s;
        if !(a.is_finite() && b.is_finite() && c.is_finite() && self.phase_rad.is_finite()) {
            return Err("trajectory parameters must be finite".into());
        }
        if a <= 0.0 {
            return Err("trajectory coefficient a must be positive".into());
        }
        if !(self.frequency_rad_s > 0.0 && self.frequency_rad_s.is_finite()) {
            return Err("trajectory frequency must be positive".into());
        }
        Ok(())
    }

    /// Curve velocity and its first two time derivatives at `t` (phase applied).
    pub fn velocity_derivatives(&self, t: f64) -> (Vec3, Vec3, Vec3) {
        let [a, b, c] = self.coefficients_m_s;
        let w = self.frequency_rad_s;
        let (s, co) = (w * t + self.phase_rad).sin_cos();
        (
            Vec3::new(a, b * s, c * co),
            Vec3::new(0.0, b * w * co, -c * w * s),
            Vec3::new(0.0, -b * w * w * s, -c * w * w * co),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceState {
    pub v_d: Vec3,
    pub q_d: UnitQuat,
}

/// A unit vector orthogonal to `t`, built from the world axis least aligned with it.
fn fallback_normal(t: Vec3) -> Vec3 {
    let axis = [Vec3::Y, Vec3::Z, Vec3::X]
        .into_iter()
        .min_by(|a, b| a.dot(t).abs().total_cmp(&b.dot(t).abs()))
        .unwrap_or(Vec3::Y);
    (axis - t * axis.dot(t)).try_normalize(0.0).unwrap_or(Vec3::Y)
}

/// Frenet–Serret frame `[T N B]` at `t` as a body attitude (x = tangent, y = normal,
/// z = binormal). Returns the attitude and the normal used.
///
/// Where `|T'|` vanishes the previous normal (re-orthogonalized against the current
/// tangent) is held; without one a fixed world axis is used.
pub fn frenet_attitude(tp: &TrajectoryParams, t: f64, prev_normal: Option<Vec3>) -> (UnitQuat, Vec3) {
    let (v, dv, _) = tp.velocity_derivatives(t);
    let speed = v.norm();
    let tangent = v / speed;
    // T' = (v' − T(T·v')) / |v|
    let dt = (dv - tangent * tangent.dot(dv)) / speed;
    let normal = match dt.try_normalize(DEGENERATE_CURVATURE) {
        Some(n) => n,
        None => prev_normal
            .and_then(|n| (n - tangent * n.dot(tangent)).try_normalize(1e-9))
            .unwrap_or_else(|| fallback_normal(tangent)),
    };
    let binormal = tangent.cross(normal);
    let m = [
        [tangent.x, normal.x, binormal.x],
        [tangent.y, normal.y, binormal.y],
        [tangent.z, normal.z, binormal.z],
    ];
    (UnitQuat::from_rotation_matrix(&m), normal)
}

/// Analytic angular rate of the Frenet frame, `|v|·sqrt(κ² + τ²)`.
pub fn frenet_angular_rate(tp: &TrajectoryParams, t: f64) -> f64 {
    let (v, dv, ddv) = tp.velocity_derivatives(t);
    let speed = v.norm();
    let vxdv = v.cross(dv);
    let c2 = vxdv.norm_squared();
    if c2 < 1e-24 {
        return 0.0;
    }
    let curvature = c2.sqrt() / speed.powi(3);
    let torsion = vxdv.dot(ddv) / c2;
    speed * (curvature * curvature + torsion * torsion).sqrt()
}

/// Uniform direction on the unit sphere scaled to `speed`.
pub fn sample_velocity_reference<R: Rng + ?Sized>(rng: &mut R, speed: f64) -> Vec3 {
    loop {
        let g = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if let Some(d) = g.try_normalize(1e-12) {
            return d * speed;
        }
    }
}

/// Haar-uniform random rotation (Shoemake's method).
pub fn sample_uniform_rotation<R: Rng + ?Sized>(rng: &mut R) -> UnitQuat {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random::<f64>() * TAU;
    let u3: f64 = rng.random::<f64>() * TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    UnitQuat::new(a * u2.sin(), a * u2.cos(), b * u3.sin(), b * u3.cos()).unwrap_or_default()
}

/// Desired-state generator for one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeReference {
    pub v_d: Vec3,
    pub trajectory: TrajectoryParams,
    /// Constant world-frame pre-rotation applied to the Frenet attitude.
    pub pre_rotation: UnitQuat,
    normal: Option<Vec3>,
}

impl EpisodeReference {
    pub fn new(v_d: Vec3, trajectory: TrajectoryParams, pre_rotation: UnitQuat) -> Self {
        Self { v_d, trajectory, pre_rotation, normal: None }
    }

    /// Random velocity direction, phase offset in `[0, 2π/ω)` and pre-rotation.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, base: &TrajectoryParams, speed: f64) -> Self {
        let v_d = sample_velocity_reference(rng, speed);
        let phase_time: f64 = rng.random::<f64>() * TAU / base.frequency_rad_s;
        let trajectory = TrajectoryParams {
            phase_rad: base.phase_rad + base.frequency_rad_s * phase_time,
            ..*base
        };
        let pre_rotation = sample_uniform_rotation(rng);
        Self::new(v_d, trajectory, pre_rotation)
    }

    /// Reference at episode time `t`. Calls must be made in non-decreasing `t` for
    /// the degenerate-curvature fallback to hold the previous normal.
    pub fn at(&mut self, t: f64) -> ReferenceState {
        let (frame, normal) = frenet_attitude(&self.trajectory, t, self.normal);
        self.normal = Some(normal);
        ReferenceState {
            v_d: self.v_d,
            q_d: hamilton_product(self.pre_rotation, frame),
        }
    }
}

/// Full reference schedule for one episode, sampled at `t_k = k·dt`, `k < horizon`.
pub fn episode_references<R: Rng + ?Sized>(
    rng: &mut R,
    base: &TrajectoryParams,
    speed: f64,
    horizon: usize,
    dt: f64,
) -> Vec<ReferenceState> {
    let mut ep = EpisodeReference::sample(rng, base, speed);
    (0..horizon).map(|k| ep.at(k as f64 * dt)).collect()
}
