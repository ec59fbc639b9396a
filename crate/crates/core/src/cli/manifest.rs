use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CliError, RunConfig};
use crate::dataset::{table_to_csv_string, RawTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFingerprint {
    pub rows: usize,
    pub columns: Vec<String>,
    /// SHA-256 of the table in canonical CSV form.
    pub column_hash: String,
}

impl InputFingerprint {
    pub fn of(table: &RawTable) -> Self {
        let digest = Sha256::digest(table_to_csv_string(table).as_bytes());
        Self { rows: table.len(), columns: table.columns().to_vec(), column_hash: hex::encode(digest) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub seed: u64,
    /// Component seeds derived from the global seed by name.
    pub sub_seeds: BTreeMap<String, u64>,
    pub input: Option<InputFingerprint>,
    pub files: Vec<String>,
    pub exit_status: i32,
    pub error: Option<String>,
    pub duration_s: f64,
    pub timestamp: Option<String>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Input(e.to_string()))?;
        std::fs::write(dir.join("manifest.json"), text + "\n")
            .map_err(|e| CliError::Input(format!("cannot write manifest: {e}")))
    }
}
