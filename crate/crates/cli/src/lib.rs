//! Command-line experiment driver for the prethermal toolkit.

pub mod config;
pub mod scenarios;

pub use config::{validate_config, ConfigError, ExperimentConfig, Scenario};
pub use scenarios::run_scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigError>),

    #[error(transparent)]
    Sim(#[from] prethermal::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code: 2 for configuration errors, 3 for resource caps.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Sim(e) if e.is_resource_limit() => 3,
            CliError::Sim(prethermal::Error::InvalidParameter { .. }) => 2,
            _ => 1,
        }
    }
}

/// Validates and runs a configuration file.
pub fn run_file(path: &std::path::Path) -> Result<Vec<String>, CliError> {
    let raw = std::fs::read_to_string(path)?;
    let config = validate_config(&raw).map_err(CliError::Config)?;
    run_scenario(&config, &raw)
}
