//! Command-line front end of `wigner-flow`: scenario configs, presets and
//! artifact output.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{ConfigFile, OutputSelection, ScenarioConfig, TimeConfig};
pub use error::CliError;
pub use run::{run_scenario, RunManifest, RunOptions, MANIFEST_FILE};
