//! Scenario files, presets, sweeps and file exports for the plasmodicke
//! command-line tool.

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod presets;
pub mod run;
pub mod sweep;

pub use config::{parse_config, parse_str, parse_value, Scenario, SweepSpec, Task};
pub use error::{CliError, CliResult};
pub use output::Manifest;
pub use run::run_scenario;
pub use sweep::{sweep, SweepTable};

use std::path::Path;

/// Scenario tree from a file path or a preset name.
pub fn load_value(spec: &str) -> CliResult<serde_json::Value> {
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {spec}: {e}")))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{spec}: malformed scenario: {e}")))
    } else {
        presets::preset_value(spec)
            .ok_or_else(|| CliError::Config(format!("`{spec}` is neither a readable file nor a preset name")))
    }
}

/// Loads a scenario from a file path or a preset name.
pub fn load(spec: &str) -> CliResult<Scenario> {
    parse_value(load_value(spec)?)
}
