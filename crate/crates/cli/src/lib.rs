//! Experiment orchestration for the fading-channel capacity toolkit: a flat
//! key-value configuration format, per-subcommand runners, and CSV output
//! with reproducible seeds.

pub mod config;
pub mod runner;

pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use runner::{run_experiment, RunSummary, RunnerError, Subcommand};
