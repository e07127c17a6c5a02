//! Run manifests: what was run, on which inputs, producing which outputs.
//!
//! Re-running a command with identical inputs and configuration produces
//! byte-identical data outputs; the manifest's timestamp is the only field
//! allowed to differ between such runs, which is why it lives in its own
//! file next to the data.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
pub(crate) struct RunManifest {
    command: String,
    inputs: Vec<InputDigest>,
    /// Effective settings after merging flags and the config file.
    config: serde_json::Value,
    outputs: Vec<String>,
    timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(command: &str, inputs: Vec<(String, String)>, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            inputs: inputs
                .into_iter()
                .map(|(path, sha256)| InputDigest { path, sha256 })
                .collect(),
            config,
            outputs: Vec::new(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.display().to_string());
        self
    }

    /// Writes next to `default_anchor` unless an explicit path was given.
    pub fn write(self, explicit: Option<&Path>, default_anchor: &Path) -> Result<(), CliError> {
        let path: PathBuf = match explicit {
            Some(p) => p.to_path_buf(),
            None => default_anchor.with_extension("manifest.json"),
        };
        std::fs::write(
            path,
            serde_json::to_string_pretty(&self).expect("manifests serialize"),
        )?;
        Ok(())
    }
}
