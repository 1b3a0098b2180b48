//! 6DOF rigid-body and hydrodynamic model of a holonomic underwater vehicle.
//!
//! ```text
//! q̇ = ½ q ⊗ [0; ω]
//! M ν̇ + C(ν) ν + D(ν) ν + g(q) = K a
//! ```
//!
//! with `ν = [v; ω]` in the body frame (SNAME axes, origin at the center of mass)
//! and `M = M_RB + M_A`. `C(ν)` is the skew parameterization built from `M`,
//! `D(ν)` is diagonal linear plus quadratic damping, and `g(q)` is the
//! hydrostatic wrench from weight at the CM and buoyancy at the CB.

use nalgebra::{Cholesky, Matrix3, Matrix6, Vector6, U6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::so3::{integrate_attitude, rotate_vector, rotate_vector_inv, UnitQuat, Vec3};

pub const GRAVITY: f64 = 9.81;
pub const MAX_DT: f64 = 0.05;

/// Downward unit vector of the NED frame.
const E_DOWN: Vec3 = Vec3::Z;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("state diverged (non-finite acceleration)")]
    Diverged,
}

/// Hydrodynamic parameter set for one vehicle instance. All units SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub mass_kg: f64,
    /// Rigid-body inertia about the CM, body frame.
    pub inertia_kg_m2: [[f64; 3]; 3],
    /// Added-mass matrix `M_A` (must be symmetric).
    pub added_mass: [[f64; 6]; 6],
    pub lin_damping: [f64; 6],
    pub quad_damping: [f64; 6],
    pub weight_n: f64,
    pub buoyancy_n: f64,
    /// Center of buoyancy relative to the CM, body frame.
    pub r_cb_m: Vec3,
    /// Diagonal of the thrust gain matrix `K` (N for surge/sway/heave, N·m for roll/pitch/yaw).
    pub thrust_gain: [f64; 6],
}

impl Default for VehicleParams {
    /// A BlueROV2-Heavy-class vehicle: 13.5 kg, slightly positively buoyant, CB 1 cm above CM.
    fn default() -> Self {
        let mass = 13.5;
        let mut added_mass = [[0.0; 6]; 6];
        for (i, m) in [5.5, 12.7, 14.57, 0.12, 0.12, 0.12].into_iter().enumerate() {
            added_mass[i][i] = m;
        }
        Self {
            mass_kg: mass,
            inertia_kg_m2: [[0.26, 0.0, 0.0], [0.0, 0.23, 0.0], [0.0, 0.0, 0.37]],
            added_mass,
            lin_damping: [4.03, 6.22, 5.18, 0.07, 0.07, 0.07],
            quad_damping: [18.18, 21.66, 36.99, 1.55, 1.55, 1.55],
            weight_n: mass * GRAVITY,
            buoyancy_n: 133.76,
            r_cb_m: Vec3::new(0.0, 0.0, -0.01),
            thrust_gain: [113.0, 113.0, 160.0, 37.0, 20.0, 28.0],
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: &str| Err(DynamicsError::InvalidParameters(m.to_string()));
        let finite = std::iter::once(self.mass_kg)
            .chain(self.inertia_kg_m2.iter().flatten().copied())
            .chain(self.added_mass.iter().flatten().copied())
            .chain(self.lin_damping)
            .chain(self.quad_damping)
            .chain([self.weight_n, self.buoyancy_n])
            .chain(self.r_cb_m.to_array())
            .chain(self.thrust_gain)
            .all(f64::is_finite);
        if !finite {
            return bad("non-finite entry");
        }
        if self.mass_kg <= 0.0 {
            return bad("mass must be positive");
        }
        if self.weight_n < 0.0 || self.buoyancy_n < 0.0 {
            return bad("weight and buoyancy must be non-negative");
        }
        if self.lin_damping.iter().chain(&self.quad_damping).any(|&d| d < 0.0) {
            return bad("damping coefficients must be non-negative");
        }
        if self.thrust_gain.iter().any(|&k| k <= 0.0) {
            return bad("thrust gains must be positive");
        }
        let inertia = Matrix3::from_fn(|i, j| self.inertia_kg_m2[i][j]);
        if !is_symmetric(inertia.as_slice(), 3) || inertia.cholesky().is_none() {
            return bad("inertia must be symmetric positive definite");
        }
        let added = Matrix6::from_fn(|i, j| self.added_mass[i][j]);
        if !is_symmetric(added.as_slice(), 6) {
            return bad("added-mass matrix must be symmetric");
        }
        Ok(())
    }
}

fn is_symmetric(col_major: &[f64], n: usize) -> bool {
    let scale = col_major.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    (0..n).all(|i| (0..i).all(|j| (col_major[i * n + j] - col_major[j * n + i]).abs() <= 1e-9 * scale))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyState {
    pub q: UnitQuat,
    /// Body linear velocity `[u, v, w]`.
    pub v: Vec3,
    /// Body angular velocity `[p, q, r]`.
    pub omega: Vec3,
    /// NED position.
    pub p: Vec3,
}

impl BodyState {
    pub fn nu(&self) -> Vector6<f64> {
        Vector6::new(self.v.x, self.v.y, self.v.z, self.omega.x, self.omega.y, self.omega.z)
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.omega.is_finite() && self.p.is_finite() && self.q.coords().iter().all(|c| c.is_finite())
    }
}

/// Body-frame force/torque pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
}

impl Wrench {
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.force.x, self.force.y, self.force.z, self.torque.x, self.torque.y, self.torque.z)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            force: Vec3::new(v[0], v[1], v[2]),
            torque: Vec3::new(v[3], v[4], v[5]),
        }
    }
}

/// `M = M_RB + M_A`, verified symmetric positive definite.
pub fn mass_matrix(params: &VehicleParams) -> Result<Matrix6<f64>, DynamicsError> {
    params.validate()?;
    let mut m = Matrix6::from_fn(|i, j| params.added_mass[i][j]);
    for i in 0..3 {
        m[(i, i)] += params.mass_kg;
        for j in 0..3 {
            m[(3 + i, 3 + j)] += params.inertia_kg_m2[i][j];
        }
    }
    if m.cholesky().is_none() {
        return Err(DynamicsError::InvalidParameters("mass matrix is not positive definite".into()));
    }
    Ok(m)
}

#[inline]
fn split(nu: &Vector6<f64>) -> (Vec3, Vec3) {
    (Vec3::new(nu[0], nu[1], nu[2]), Vec3::new(nu[3], nu[4], nu[5]))
}

#[inline]
fn join(a: Vec3, b: Vec3) -> Vector6<f64> {
    Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z)
}

/// `C(ν)ν` with `C(ν) = [[0, −S(p₁)], [−S(p₁), −S(p₂)]]` and `[p₁; p₂] = Mν`.
#[inline]
pub fn coriolis_wrench(m: &Matrix6<f64>, nu: &Vector6<f64>) -> Vector6<f64> {
    let (v, w) = split(nu);
    let (p1, p2) = split(&(m * nu));
    join(w.cross(p1), v.cross(p1) + w.cross(p2))
}

/// `D(ν)ν`, diagonal linear plus quadratic damping.
#[inline]
pub fn damping_wrench(params: &VehicleParams, nu: &Vector6<f64>) -> Vector6<f64> {
    Vector6::from_fn(|i, _| (params.lin_damping[i] + params.quad_damping[i] * nu[i].abs()) * nu[i])
}

/// Hydrostatic wrench acting on the vehicle (weight at the CM, buoyancy at the CB),
/// expressed in the body frame. The model's `g(q)` is its negation.
#[inline]
pub fn restoring_wrench(params: &VehicleParams, q: UnitQuat) -> Vector6<f64> {
    let down_b = rotate_vector_inv(q, E_DOWN);
    let buoyancy = down_b * (-params.buoyancy_n);
    let force = down_b * params.weight_n + buoyancy;
    join(force, params.r_cb_m.cross(buoyancy))
}

/// `τ = K·clamp(a, −1, 1)`; the flag reports whether any component was clamped.
#[inline]
pub fn actuation_wrench(params: &VehicleParams, a: &[f64; 6]) -> (Wrench, bool) {
    let mut saturated = false;
    let tau = Vector6::from_fn(|i, _| {
        let ai = if a[i].is_nan() { 0.0 } else { a[i] };
        let c = ai.clamp(-1.0, 1.0);
        saturated |= c != a[i];
        params.thrust_gain[i] * c
    });
    (Wrench::from_vector(&tau), saturated)
}

/// Hydrostatic potential energy relative to the world origin.
pub fn hydrostatic_potential(params: &VehicleParams, state: &BodyState) -> f64 {
    let cb_depth = state.p.z + rotate_vector(state.q, params.r_cb_m).z;
    params.buoyancy_n * cb_depth - params.weight_n * state.p.z
}

/// A vehicle with its mass matrix factored once; the parameters are fixed for its lifetime.
#[derive(Debug, Clone)]
pub struct VehicleModel {
    params: VehicleParams,
    mass: Matrix6<f64>,
    chol: Cholesky<f64, U6>,
}

impl VehicleModel {
    pub fn new(params: VehicleParams) -> Result<Self, DynamicsError> {
        let mass = mass_matrix(&params)?;
        let chol = mass
            .cholesky()
            .ok_or_else(|| DynamicsError::InvalidParameters("mass matrix is not positive definite".into()))?;
        Ok(Self { params, mass, chol })
    }

    pub fn params(&self) -> &VehicleParams {
        &self.params
    }

    pub fn mass_matrix(&self) -> &Matrix6<f64> {
        &self.mass
    }

    pub fn kinetic_energy(&self, state: &BodyState) -> f64 {
        let nu = state.nu();
        0.5 * nu.dot(&(self.mass * nu))
    }

    /// Kinetic plus hydrostatic potential energy.
    pub fn energy(&self, state: &BodyState) -> f64 {
        self.kinetic_energy(state) + hydrostatic_potential(&self.params, state)
    }

    /// `ν̇` for the given state and actuation wrench.
    #[inline]
    pub fn acceleration(&self, state: &BodyState, tau: &Vector6<f64>) -> Vector6<f64> {
        let nu = state.nu();
        let rhs = tau + restoring_wrench(&self.params, state.q)
            - coriolis_wrench(&self.mass, &nu)
            - damping_wrench(&self.params, &nu);
        self.chol.solve(&rhs)
    }

    /// One semi-implicit Euler step: velocities first, then attitude and position
    /// with the updated velocities. Returns the new state and the saturation flag.
    #[inline]
    pub fn step(&self, state: &BodyState, a: &[f64; 6], dt: f64) -> Result<(BodyState, bool), DynamicsError> {
        let (tau, saturated) = actuation_wrench(&self.params, a);
        let acc = self.acceleration(state, &tau.to_vector());
        if !acc.iter().all(|x| x.is_finite()) {
            return Err(DynamicsError::Diverged);
        }
        let (v, omega) = split(&(state.nu() + acc * dt));
        let q = integrate_attitude(state.q, omega, dt);
        let p = state.p + rotate_vector(q, v) * dt;
        Ok((BodyState { q, v, omega, p }, saturated))
    }
}

/// Stateless single step; factors `M` on every call. Use [`VehicleModel`] in loops.
pub fn step_dynamics(
    state: &BodyState,
    a: &[f64; 6],
    params: &VehicleParams,
    dt: f64,
) -> Result<BodyState, DynamicsError> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(DynamicsError::InvalidArgument(format!("dt = {dt} outside (0, {MAX_DT}]")));
    }
    if !state.is_finite() {
        return Err(DynamicsError::InvalidArgument("non-finite state".into()));
    }
    VehicleModel::new(params.clone())?.step(state, a, dt).map(|(s, _)| s)
}
