//! Configuration, artifact formats and pipelines for the `heatctl` command.
//!
//! * [`config`]: flat TOML experiment configuration.
//! * [`scenario`]: the standard data built from a configuration.
//! * [`pipelines`]: one report-producing function per subcommand.
//! * [`report`]: `summary.kv`, CSV tables and the SHA-256 manifest.

pub mod config;
pub mod pipelines;
pub mod report;
pub mod scenario;
mod validate;

pub use config::{ConfigError, ExperimentConfig, LawSpec};
pub use pipelines::{run_experiment, Command};
pub use report::{emit_report, Check, Report, Table};
pub use validate::picard_steady;

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "HEATCTL_OUT_DIR";
