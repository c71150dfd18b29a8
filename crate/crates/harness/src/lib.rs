//! Experiment driver for contingency identification: simulated events,
//! PMU deployments, noisy observations, sweeps and report files.

pub mod config;
pub mod error;
pub mod noise;
pub mod output;
pub mod simulate;
pub mod sweep;

pub use config::{DeploymentSpec, EventFamily, ExperimentConfig};
pub use error::HarnessError;
pub use sweep::{run_sweep, SweepResult};
