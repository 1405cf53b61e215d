//! Experiments, file formats and the command-line harness built on
//! [`fbmarb_core`].

pub mod config;
pub mod experiments;
pub mod fft;
pub mod report;
pub mod simulate;
pub mod stats;
pub mod validate;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, ExperimentError};
pub use report::{ExperimentReport, Outcome};
