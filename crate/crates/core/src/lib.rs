//! Simulation core for learned velocity/attitude control of holonomic underwater vehicles.
//!
//! - [`so3`]: unit quaternions, attitude errors and exact attitude integration.
//! - [`dynamics`]: the 6DOF rigid-body and hydrodynamic model with a fixed-step integrator.
//! - [`reference`]: per-episode desired velocity and Frenet–Serret attitude references.
//! - [`env`]: the batched training environment (observations, reward, randomization, lifecycle).
//! - [`guidance`]: 3D line-of-sight guidance over waypoint paths.

pub mod dynamics;
pub mod env;
pub mod guidance;
pub mod reference;
pub mod rng;
pub mod so3;

pub use dynamics::{BodyState, VehicleModel, VehicleParams, Wrench};
pub use env::{EnvBatch, EnvConfig, Observation, RandomizationSpec, RewardWeights};
pub use guidance::{GuidanceState, WaypointPath};
pub use reference::{ReferenceState, TrajectoryParams};
pub use so3::{UnitQuat, Vec3};
