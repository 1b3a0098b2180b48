//! Lookahead-based 3D line-of-sight guidance for a fully actuated vehicle.
//!
//! The commanded velocity steers toward a point `Δ` ahead of the projection of
//! the vehicle onto the active segment. Only linear velocity is commanded; the
//! attitude argument is used solely to express it in the body frame.

use serde::{Deserialize, Serialize};

use crate::so3::{rotate_vector_inv, UnitQuat, Vec3};

const MIN_SEGMENT_LENGTH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointPath {
    /// NED waypoints in metres.
    pub waypoints: Vec<Vec3>,
    #[serde(default = "default_acceptance")]
    pub acceptance_radius_m: f64,
    #[serde(default = "default_speed")]
    pub speed_m_s: f64,
    #[serde(default = "default_lookahead")]
    pub lookahead_m: f64,
}

fn default_acceptance() -> f64 {
    0.3
}

fn default_speed() -> f64 {
    0.5
}

fn default_lookahead() -> f64 {
    1.0
}

impl WaypointPath {
    pub fn new(waypoints: Vec<Vec3>) -> Self {
        Self {
            waypoints,
            acceptance_radius_m: default_acceptance(),
            speed_m_s: default_speed(),
            lookahead_m: default_lookahead(),
        }
    }

    pub fn segment_count(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.waypoints.len() < 2 {
            return Err("a path needs at least two waypoints".into());
        }
        if let Some(i) = self.waypoints.iter().position(|w| !w.is_finite()) {
            return Err(format!("waypoint {i} is not finite"));
        }
        if let Some(i) = self
            .waypoints
            .windows(2)
            .position(|w| (w[1] - w[0]).norm() <= MIN_SEGMENT_LENGTH)
        {
            return Err(format!("waypoints {i} and {} coincide", i + 1));
        }
        if !(self.lookahead_m > 0.0 && self.acceptance_radius_m > 0.0 && self.speed_m_s >= 0.0) {
            return Err("lookahead and acceptance radius must be positive, speed non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GuidanceState {
    pub segment: usize,
    pub finished: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosCommand {
    /// Desired velocity in the body frame.
    pub v_body: Vec3,
    /// Desired velocity in the world frame.
    pub v_world: Vec3,
    pub state: GuidanceState,
    /// A waypoint was reached during this call.
    pub switched: bool,
    /// Zero-length segments passed over during this call.
    pub skipped_degenerate: usize,
}

fn segment(path: &WaypointPath, k: usize) -> (Vec3, Vec3, f64) {
    let a = path.waypoints[k];
    let b = path.waypoints[k + 1];
    let len = (b - a).norm();
    (a, b, len)
}

/// Desired velocity from the LOS law, advancing the segment index on arrival.
pub fn los_velocity(p: Vec3, q: UnitQuat, path: &WaypointPath, gs: GuidanceState) -> LosCommand {
    let n_seg = path.segment_count();
    let mut state = gs;
    let mut switched = false;
    let mut skipped = 0;
    while !state.finished {
        if state.segment >= n_seg {
            state.finished = true;
            break;
        }
        let (_, b, len) = segment(path, state.segment);
        if len <= MIN_SEGMENT_LENGTH {
            skipped += 1;
            state.segment += 1;
            continue;
        }
        if (p - b).norm() < path.acceptance_radius_m {
            switched = true;
            if state.segment + 1 >= n_seg {
                state.finished = true;
            } else {
                state.segment += 1;
            }
            continue;
        }
        break;
    }
    if state.finished {
        state.segment = n_seg.saturating_sub(1);
        return LosCommand { v_body: Vec3::ZERO, v_world: Vec3::ZERO, state, switched, skipped_degenerate: skipped };
    }
    let (a, _, len) = segment(path, state.segment);
    let dir = (path.waypoints[state.segment + 1] - a) / len;
    let along = (p - a).dot(dir);
    let target = a + dir * (along + path.lookahead_m).min(len);
    let v_world = (target - p)
        .try_normalize(1e-12)
        .map(|d| d * path.speed_m_s)
        .unwrap_or(dir * path.speed_m_s);
    LosCommand {
        v_body: rotate_vector_inv(q, v_world),
        v_world,
        state,
        switched,
        skipped_degenerate: skipped,
    }
}

/// Perpendicular distance from `p` to the line through the active segment.
pub fn cross_track_error(p: Vec3, path: &WaypointPath, gs: GuidanceState) -> f64 {
    let k = gs.segment.min(path.segment_count().saturating_sub(1));
    let (a, b, len) = segment(path, k);
    if len <= MIN_SEGMENT_LENGTH {
        return (p - a).norm();
    }
    let d = (b - a) / len;
    let r = p - a;
    (r - d * r.dot(d)).norm()
}
