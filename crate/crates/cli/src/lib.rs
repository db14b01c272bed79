//! Configuration, orchestration and reproducible output for the polarium
//! experiment families.

pub mod config;
pub mod emit;
pub mod run;
pub mod suite;

pub use config::{parse_config, ConfigError, Experiment, ExperimentConfig, Kind};
pub use emit::{emit_results, Cell, Format, Records};
pub use run::{run_experiment, RunError, RunManifest};
