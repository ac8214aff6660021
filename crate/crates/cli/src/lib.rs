//! Config-driven experiment runner for `exterior_heat`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, Task};
pub use run::{load_config, run_experiment, RunError, RunOptions, RunReport};
