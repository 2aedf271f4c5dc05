//! File formats, experiment configuration and the command-line runner for
//! the samplers in `mint-core`.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod parallel;
pub mod report;
pub mod workload;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use experiment::{output_dir, run_experiment, Outcome, RunRecord};
pub use report::{diagnose, Diagnostics};
