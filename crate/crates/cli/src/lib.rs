//! Scenario files, named experiments, parameter sweeps and CSV output for
//! the DCF policing simulator in `dcf_police_core`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod presets;
pub mod sweep;
pub mod tables;

pub use config::{parse_scenario, PhyPreset, ScenarioConfig};
pub use error::{CliError, ConfigError};
pub use experiment::{run_all, run_outputs, Overrides, RunResult, RunSpec};
pub use output::OutputFile;
