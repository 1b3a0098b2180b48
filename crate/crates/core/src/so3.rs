//! Quaternion and rotation arithmetic.
//!
//! Quaternions are Hamilton-convention `(w, x, y, z)` and represent the rotation
//! from the body frame to the world (NED) frame. Euler angles follow the
//! intrinsic ZYX (yaw, pitch, roll) marine convention.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum So3Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Returns `None` for vectors shorter than `eps`.
    #[inline]
    pub fn try_normalize(self, eps: f64) -> Option<Vec3> {
        let n = self.norm();
        (n > eps).then(|| self / n)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn map(self, f: impl Fn(f64) -> f64) -> Vec3 {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::from_array(a)
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// A unit quaternion `w + xi + yj + zk`.
///
/// Every constructor and operation renormalizes, so the norm stays within
/// rounding of 1. The sign is left as produced except where noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct UnitQuat {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Default for UnitQuat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl TryFrom<[f64; 4]> for UnitQuat {
    type Error = So3Error;
    fn try_from(c: [f64; 4]) -> Result<Self, Self::Error> {
        UnitQuat::new(c[0], c[1], c[2], c[3])
    }
}

impl From<UnitQuat> for [f64; 4] {
    fn from(q: UnitQuat) -> Self {
        q.coords()
    }
}

impl UnitQuat {
    pub const IDENTITY: UnitQuat = UnitQuat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Normalizes `(w, x, y, z)`; rejects non-finite or near-zero input.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, So3Error> {
        if !(w.is_finite() && x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(So3Error::InvalidArgument(format!(
                "non-finite quaternion ({w}, {x}, {y}, {z})"
            )));
        }
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if n < 1e-12 {
            return Err(So3Error::InvalidArgument("zero-norm quaternion".into()));
        }
        Ok(Self::from_raw_normalized(w / n, x / n, y / n, z / n))
    }

    #[inline]
    fn from_raw_normalized(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    #[inline]
    fn renormalized(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        Self { w: w / n, x: x / n, y: y / n, z: z / n }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self, So3Error> {
        let axis = axis
            .try_normalize(1e-12)
            .ok_or_else(|| So3Error::InvalidArgument("zero rotation axis".into()))?;
        let (s, c) = (0.5 * angle).sin_cos();
        Ok(Self::renormalized(c, axis.x * s, axis.y * s, axis.z * s))
    }

    /// Quaternion exponential of a rotation vector (axis · angle).
    pub fn from_rotation_vector(rv: Vec3) -> Self {
        let theta = rv.norm();
        let half = 0.5 * theta;
        // sin(θ/2)/θ, series below 1e-4 rad where the ratio loses precision
        let k = if theta < 1e-4 {
            0.5 - theta * theta / 48.0
        } else {
            half.sin() / theta
        };
        Self::renormalized(half.cos(), rv.x * k, rv.y * k, rv.z * k)
    }

    /// Quaternion of the rotation matrix whose columns are the body axes in world coordinates.
    pub fn from_rotation_matrix(m: &[[f64; 3]; 3]) -> Self {
        let tr = m[0][0] + m[1][1] + m[2][2];
        let (w, x, y, z);
        if tr > 0.0 {
            let s = (tr + 1.0).sqrt() * 2.0;
            w = 0.25 * s;
            x = (m[2][1] - m[1][2]) / s;
            y = (m[0][2] - m[2][0]) / s;
            z = (m[1][0] - m[0][1]) / s;
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            w = (m[2][1] - m[1][2]) / s;
            x = 0.25 * s;
            y = (m[0][1] + m[1][0]) / s;
            z = (m[0][2] + m[2][0]) / s;
        } else if m[1][1] > m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            w = (m[0][2] - m[2][0]) / s;
            x = (m[0][1] + m[1][0]) / s;
            y = 0.25 * s;
            z = (m[1][2] + m[2][1]) / s;
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            w = (m[1][0] - m[0][1]) / s;
            x = (m[0][2] + m[2][0]) / s;
            y = (m[1][2] + m[2][1]) / s;
            z = 0.25 * s;
        }
        Self::renormalized(w, x, y, z)
    }

    #[inline]
    pub fn w(&self) -> f64 {
        self.w
    }

    #[inline]
    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    #[inline]
    pub fn coords(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Same rotation, opposite sign.
    #[inline]
    pub fn negated(&self) -> Self {
        Self { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Representative with `w >= 0`.
    #[inline]
    pub fn canonical(&self) -> Self {
        if self.w < 0.0 {
            self.negated()
        } else {
            *self
        }
    }

    pub fn to_rotation_matrix(&self) -> [[f64; 3]; 3] {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }
}

/// `q1 ⊗ q2`.
#[inline]
pub fn hamilton_product(q1: UnitQuat, q2: UnitQuat) -> UnitQuat {
    let (a1, b1, c1, d1) = (q1.w, q1.x, q1.y, q1.z);
    let (a2, b2, c2, d2) = (q2.w, q2.x, q2.y, q2.z);
    UnitQuat::renormalized(
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    )
}

impl Mul for UnitQuat {
    type Output = UnitQuat;
    #[inline]
    fn mul(self, rhs: UnitQuat) -> UnitQuat {
        hamilton_product(self, rhs)
    }
}

#[inline]
pub fn conjugate(q: UnitQuat) -> UnitQuat {
    UnitQuat { w: q.w, x: -q.x, y: -q.y, z: -q.z }
}

/// Attitude error `conj(q_d) ⊗ q`, canonicalized to `w >= 0`.
#[inline]
pub fn quat_error(q_d: UnitQuat, q: UnitQuat) -> UnitQuat {
    hamilton_product(conjugate(q_d), q).canonical()
}

/// Geodesic angle between two attitudes, in `[0, π]`.
#[inline]
pub fn quat_angle(q_d: UnitQuat, q: UnitQuat) -> f64 {
    let e = hamilton_product(conjugate(q_d), q);
    // 2·atan2(|v|, |w|) equals 2·acos(|w|) for unit e and stays accurate near zero
    2.0 * e.vector().norm().atan2(e.w.abs()).clamp(0.0, FRAC_PI_2)
}

/// Advances `q` by body rate `omega` held constant over `dt`: `q ⊗ exp(omega·dt/2)`.
#[inline]
pub fn integrate_attitude(q: UnitQuat, omega: Vec3, dt: f64) -> UnitQuat {
    hamilton_product(q, UnitQuat::from_rotation_vector(omega * dt))
}

/// Rotates `v` by `q` (body → world for an attitude quaternion).
#[inline]
pub fn rotate_vector(q: UnitQuat, v: Vec3) -> Vec3 {
    let u = q.vector();
    let t = 2.0 * u.cross(v);
    v + q.w * t + u.cross(t)
}

/// Inverse rotation (world → body).
#[inline]
pub fn rotate_vector_inv(q: UnitQuat, v: Vec3) -> Vec3 {
    rotate_vector(conjugate(q), v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Set near gimbal lock; roll is then fixed to 0 and yaw absorbs the ambiguity.
    pub degenerate: bool,
}

const GIMBAL_LOCK_EPS: f64 = 1e-6;

pub fn euler_to_quat(roll: f64, pitch: f64, yaw: f64) -> UnitQuat {
    let (sr, cr) = (0.5 * roll).sin_cos();
    let (sp, cp) = (0.5 * pitch).sin_cos();
    let (sy, cy) = (0.5 * yaw).sin_cos();
    UnitQuat::renormalized(
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    )
}

pub fn quat_to_euler(q: UnitQuat) -> EulerAngles {
    let r = q.to_rotation_matrix();
    let sin_pitch = (-r[2][0]).clamp(-1.0, 1.0);
    let pitch = sin_pitch.asin();
    if FRAC_PI_2 - pitch.abs() < GIMBAL_LOCK_EPS {
        return EulerAngles {
            roll: 0.0,
            pitch,
            yaw: (-r[0][1]).atan2(r[1][1]),
            degenerate: true,
        };
    }
    EulerAngles {
        roll: r[2][1].atan2(r[2][2]),
        pitch,
        yaw: r[1][0].atan2(r[0][0]),
        degenerate: false,
    }
}
