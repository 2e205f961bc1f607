//! Configuration, run orchestration and file output for the `degen-ns` binary.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_converge, cmd_decay_fit, cmd_run, cmd_scenarios, Failure};
pub use config::{normalize, parse_config, serialize_config, ConfigError, RunConfig};
