use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::input::{read_text, sidecar, write_file};

/// Record of one run, written to `<output>.manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name; `replay` parses them again.
    pub args: Vec<String>,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub timestamp: String,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        RunManifest {
            command: command.to_string(),
            args,
            config: None,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn path_for(output: &Path) -> PathBuf {
        sidecar(output, ".manifest.json")
    }

    pub fn write(&self, output: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        write_file(&Self::path_for(output), text + "\n")
    }

    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&read_text(path)?)
            .map_err(|e| CliError::Usage(format!("{} is not a run manifest: {e}", path.display())))
    }
}
