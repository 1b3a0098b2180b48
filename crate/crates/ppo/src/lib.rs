//! Actor-critic policy and clipped PPO trainer.
//!
//! Parameters live in a single flat vector so that gradients, optimizer state
//! and checkpoints share one layout. Networks evaluate in `f32` for training
//! and in `f64` for gradient verification.

pub mod adam;
pub mod buffer;
pub mod checkpoint;
pub mod loss;
pub mod mlp;
pub mod policy;
pub mod train;
pub mod update;

pub use buffer::{compute_gae, RolloutBuffer};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError, CheckpointHeader};
pub use loss::{ppo_loss, LossCoefficients, LossStats, MiniBatch};
pub use policy::{policy_forward, sample_action, ActionSample, Architecture, PolicyParams, PolicySnapshot};
pub use train::{train, IterationLog, LogRow, TrainError, TrainOutput, Trainer};
pub use update::{ppo_update, LrSchedule, PpoConfig, PpoError, UpdateStats};
