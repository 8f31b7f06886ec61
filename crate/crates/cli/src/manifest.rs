use serde::{Deserialize, Serialize};

use dirac_numerov::{EigenResult, PhysicalConfig, SolverSettings};

use crate::error::CliResult;

/// Resolved inputs of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub physical: Vec<PhysicalConfig>,
    pub settings: SolverSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub dimension: u32,
    pub result: Option<EigenResult>,
    pub error: Option<String>,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_echo: ConfigEcho,
    pub results: Vec<ResultEntry>,
}

impl RunManifest {
    pub fn new(command: &str, config_echo: ConfigEcho, results: Vec<ResultEntry>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_echo,
            results,
        }
    }

    pub fn to_json(&self) -> CliResult<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::CliError::Numerical(format!("cannot serialize manifest: {e}")))
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
