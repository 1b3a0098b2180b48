//! Evaluation scenarios: waypoint path, attitude schedule, vehicle perturbation.

use std::path::Path;

use auv_core::dynamics::{VehicleParams, GRAVITY};
use auv_core::guidance::WaypointPath;
use auv_core::rng::{stream, StreamDomain};
use auv_core::so3::{euler_to_quat, UnitQuat, Vec3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttitudeSchedule {
    /// Heading and pitch follow the commanded course and elevation; zero roll.
    CourseAligned,
    Fixed { euler_deg: [f64; 3] },
    /// A fresh uniform draw of (roll, pitch, yaw) for every segment.
    RandomPerWaypoint {
        roll_range_deg: [f64; 2],
        pitch_range_deg: [f64; 2],
        yaw_range_deg: [f64; 2],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Perturbation {
    pub mass_delta_kg: f64,
    pub buoyancy_delta_n: f64,
    /// Displacement of the centre of mass in the body frame.
    pub cm_shift_m: Vec3,
}

impl Perturbation {
    /// The model is expressed about the CM, so moving the CM by `s` moves the
    /// CB by `−s` relative to it.
    pub fn apply(&self, base: &VehicleParams) -> Result<VehicleParams, HarnessError> {
        let mut p = base.clone();
        p.mass_kg += self.mass_delta_kg;
        p.weight_n += self.mass_delta_kg * GRAVITY;
        p.buoyancy_n += self.buoyancy_delta_n;
        p.r_cb_m -= self.cm_shift_m;
        p.validate().map_err(|e| HarnessError::Input(format!("perturbed vehicle invalid: {e}")))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    pub max_duration_s: f64,
    /// Seeds random attitude draws.
    #[serde(default)]
    pub seed: u64,
    pub path: WaypointPath,
    pub attitude: AttitudeSchedule,
    #[serde(default)]
    pub perturbation: Perturbation,
    /// Start position (defaults to the first waypoint).
    #[serde(default)]
    pub initial_position_m: Option<Vec3>,
    #[serde(default)]
    pub initial_euler_deg: [f64; 3],
}

fn check_range(name: &str, [lo, hi]: [f64; 2], limit: f64) -> Result<(), String> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= -limit && hi <= limit) {
        return Err(format!("{name} must satisfy −{limit} ≤ lo ≤ hi ≤ {limit}"));
    }
    Ok(())
}

impl ScenarioSpec {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, HarnessError> {
        let s: ScenarioSpec = toml::from_str(text).map_err(|e| HarnessError::Input(format!("{origin}: {e}")))?;
        s.validate().map_err(|e| HarnessError::Input(format!("{origin}: {e}")))?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.max_duration_s > 0.0 && self.max_duration_s.is_finite()) {
            return Err("max_duration_s must be positive".into());
        }
        self.path.validate()?;
        if let AttitudeSchedule::RandomPerWaypoint { roll_range_deg, pitch_range_deg, yaw_range_deg } = &self.attitude {
            check_range("roll_range_deg", *roll_range_deg, 90.0)?;
            check_range("pitch_range_deg", *pitch_range_deg, 90.0)?;
            check_range("yaw_range_deg", *yaw_range_deg, 180.0)?;
        }
        let p = &self.perturbation;
        if !(p.mass_delta_kg.is_finite() && p.buoyancy_delta_n.is_finite() && p.cm_shift_m.is_finite()) {
            return Err("perturbation must be finite".into());
        }
        Ok(())
    }

    pub fn initial_attitude(&self) -> UnitQuat {
        let [r, p, y] = self.initial_euler_deg.map(f64::to_radians);
        euler_to_quat(r, p, y)
    }

    /// Per-segment attitude setpoints for schedules that do not depend on the
    /// vehicle's motion; reproducible from `seed`.
    pub fn segment_attitudes(&self, seed: u64) -> Option<Vec<UnitQuat>> {
        let n = self.path.segment_count();
        match &self.attitude {
            AttitudeSchedule::CourseAligned => None,
            AttitudeSchedule::Fixed { euler_deg } => {
                let [r, p, y] = euler_deg.map(f64::to_radians);
                Some(vec![euler_to_quat(r, p, y); n])
            }
            AttitudeSchedule::RandomPerWaypoint { roll_range_deg, pitch_range_deg, yaw_range_deg } => Some(
                (0..n as u64)
                    .map(|k| {
                        let mut rng = stream(seed, StreamDomain::Scenario, k);
                        let mut draw = |[lo, hi]: [f64; 2]| {
                            if lo == hi {
                                lo.to_radians()
                            } else {
                                rng.random_range(lo..hi).to_radians()
                            }
                        };
                        let (r, p, y) = (draw(*roll_range_deg), draw(*pitch_range_deg), draw(*yaw_range_deg));
                        euler_to_quat(r, p, y)
                    })
                    .collect(),
            ),
        }
    }
}

/// Attitude whose x axis points along `dir` (NED) with zero roll; `None` for a
/// vanishing direction.
pub fn course_attitude(dir: Vec3) -> Option<UnitQuat> {
    let horiz = (dir.x * dir.x + dir.y * dir.y).sqrt();
    if dir.norm() < 1e-9 {
        return None;
    }
    let yaw = dir.y.atan2(dir.x);
    let pitch = (-dir.z).atan2(horiz);
    Some(euler_to_quat(0.0, pitch, yaw))
}
