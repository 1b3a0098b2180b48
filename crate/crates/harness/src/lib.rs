//! Configuration, scenarios, evaluation metrics and the `auv` command line.

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod metrics;
pub mod replay;
pub mod scenario;

pub use config::RunConfig;
pub use error::HarnessError;
pub use scenario::ScenarioSpec;
