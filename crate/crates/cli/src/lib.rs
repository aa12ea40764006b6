//! Scenario files, presets, runs and sweeps for the `ugfsim` command.

mod error;
pub mod presets;
pub mod report;
pub mod scenario;
pub mod sweep;

pub use error::CliError;
pub use report::{render, run, run_csv, Check, Outcome, RunReport};
pub use scenario::{parse_scenario, EngineChoice, ExperimentKind, Overrides, Scenario};
pub use sweep::{sweep, SweepTable};

/// Reads and parses a scenario file.
pub fn load_file(path: &std::path::Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}
