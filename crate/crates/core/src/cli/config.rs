use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::dataset::{ImputeStrategy, SplitMode, SplitSpec, CURRENT_A, TEMPERATURE_C, TIME_S, VOLTAGE_V};
use crate::evaluation::{ModelSpec, Preprocessing, StagePlan, DEFAULT_K};
use crate::metrics::ZeroPolicy;
use crate::synthgen::SimulationConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Simulated cycles. The simulator's noise seed is always derived from the
    /// run seed, so `simulation.params.seed` is overwritten.
    Synth {
        #[serde(default)]
        simulation: SimulationConfig,
        #[serde(default)]
        missing_fraction: f64,
    },
    /// A CSV in the dataset schema; relative paths resolve against the config file.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitBlock {
    pub train_fraction: f64,
    pub mode: SplitMode,
}

impl Default for SplitBlock {
    fn default() -> Self {
        Self { train_fraction: 0.8, mode: SplitMode::Chronological }
    }
}

impl SplitBlock {
    pub fn spec(&self, seed: u64) -> SplitSpec {
        SplitSpec { train_fraction: self.train_fraction, mode: self.mode, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessingBlock {
    pub impute: ImputeStrategy,
    pub window_length: usize,
    pub horizon: usize,
    pub features: Vec<String>,
    pub split: SplitBlock,
    /// Defaults for model specs that carry no preprocessing of their own.
    pub standardize: bool,
    pub outlier_z: Option<f64>,
}

impl Default for PreprocessingBlock {
    fn default() -> Self {
        Self {
            impute: ImputeStrategy::default(),
            window_length: 16,
            horizon: 1,
            features: [TIME_S, VOLTAGE_V, CURRENT_A, TEMPERATURE_C].map(String::from).to_vec(),
            split: SplitBlock::default(),
            standardize: true,
            outlier_z: None,
        }
    }
}

impl PreprocessingBlock {
    pub fn model_defaults(&self) -> Preprocessing {
        Preprocessing { standardize: self.standardize, outlier_z: self.outlier_z, ..Preprocessing::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationBlock {
    pub k: usize,
    pub mape_zero_policy: ZeroPolicy,
    pub stages: Option<StagePlan>,
}

impl Default for EvaluationBlock {
    fn default() -> Self {
        Self { k: DEFAULT_K, mape_zero_policy: ZeroPolicy::default(), stages: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub data: DataSource,
    #[serde(default)]
    pub preprocessing: PreprocessingBlock,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub evaluation: EvaluationBlock,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Reads a config and resolves a relative CSV path against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let DataSource::Csv { path: p } = &mut cfg.data {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn model(&self, name: &str) -> Result<&ModelSpec, CliError> {
        self.models.iter().find(|m| m.name == name).ok_or_else(|| {
            let names: Vec<&str> = self.models.iter().map(|m| m.name.as_str()).collect();
            CliError::Config(format!("unknown model `{name}`; configured models: [{}]", names.join(", ")))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::from_json(r#"{"data":{"source":"synth"}}"#).unwrap();
        assert_eq!(c.preprocessing.window_length, 16);
        assert_eq!(c.evaluation.k, 5);
        assert!(matches!(c.data, DataSource::Synth { missing_fraction, .. } if missing_fraction == 0.0));
    }

    #[test]
    fn unknown_keys_are_errors() {
        for bad in [
            r#"{"data":{"source":"synth"},"sed":1}"#,
            r#"{"data":{"source":"synth","simulation":{"n_cycle":3}}}"#,
            r#"{"data":{"source":"csv","path":"a.csv","extra":true}}"#,
            r#"{"data":{"source":"synth"},"preprocessing":{"window":4}}"#,
            r#"{"data":{"source":"synth"},"evaluation":{"kk":4}}"#,
            r#"{"data":{"source":"ftp"}}"#,
        ] {
            assert!(RunConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn missing_model_lists_names() {
        let c = RunConfig::from_json(
            r#"{"data":{"source":"synth"},"models":[{"name":"KNN","model":{"kind":"knn"}}]}"#,
        )
        .unwrap();
        let e = c.model("LSTM").unwrap_err().to_string();
        assert!(e.contains("KNN"), "{e}");
    }
}
