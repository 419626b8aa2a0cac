//! Run manifest: what was run, with what, and what came out.

use std::path::Path;

use difq_core::network::Scenario;
use serde::Serialize;

use crate::checks::Check;
use crate::error::Result;
use crate::io::{scenario_hash, write_atomic, CSV_SCHEMA};

pub const TOOL: &str = "difq";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub csv_schema: &'static str,
    pub scenario_sha256: String,
    /// Built-in case the scenario matches, if any.
    pub case: Option<String>,
    pub source: Option<String>,
    pub fidelity: String,
    pub steps: u64,
    pub energy_residual: f64,
    pub files: Vec<String>,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// The scenario exactly as run.
    pub scenario: Scenario,
}

impl RunManifest {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        scenario: &Scenario,
        case: Option<String>,
        source: Option<String>,
        steps: u64,
        energy_residual: f64,
        files: Vec<String>,
        checks: Vec<Check>,
    ) -> Self {
        RunManifest {
            tool: TOOL,
            version: VERSION,
            csv_schema: CSV_SCHEMA,
            scenario_sha256: scenario_hash(scenario),
            case,
            source,
            fidelity: format!("{:?}", scenario.sim.fidelity).to_ascii_lowercase(),
            steps,
            energy_residual,
            files,
            pass: checks.iter().all(|c| c.pass),
            checks,
            scenario: scenario.clone(),
        }
    }

    /// Written last and atomically: its presence marks a complete run
    /// directory.
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).unwrap_or_default();
        write_atomic(path, text.as_bytes())
    }
}
