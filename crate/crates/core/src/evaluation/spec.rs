use serde::{Deserialize, Serialize};

use super::{invalid, Result};
use crate::baselines::{ForestConfig, KnnConfig, LinearConfig, SgdConfig, TreeConfig};
use crate::neural::{Activation, TrainConfig};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub train: TrainConfig,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self { hidden: vec![32], activation: Activation::Tanh, train: TrainConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LstmConfig {
    pub hidden_size: usize,
    pub train: TrainConfig,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self { hidden_size: 32, train: TrainConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Linear(LinearConfig),
    SgdLinear(SgdConfig),
    Knn(KnnConfig),
    Tree(TreeConfig),
    Forest(ForestConfig),
    Mlp(MlpConfig),
    Lstm(LstmConfig),
}

impl ModelKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::Linear(_) => "linear",
            ModelKind::SgdLinear(_) => "sgd_linear",
            ModelKind::Knn(_) => "knn",
            ModelKind::Tree(_) => "tree",
            ModelKind::Forest(_) => "forest",
            ModelKind::Mlp(_) => "mlp",
            ModelKind::Lstm(_) => "lstm",
        }
    }

    pub fn train_config(&self) -> Option<&TrainConfig> {
        match self {
            ModelKind::Mlp(c) => Some(&c.train),
            ModelKind::Lstm(c) => Some(&c.train),
            _ => None,
        }
    }

    pub fn train_config_mut(&mut self) -> Option<&mut TrainConfig> {
        match self {
            ModelKind::Mlp(c) => Some(&mut c.train),
            ModelKind::Lstm(c) => Some(&mut c.train),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelKind::Linear(c) if !(c.ridge_lambda >= 0.0 && c.ridge_lambda.is_finite()) => {
                Err(invalid("ridge_lambda", "must be finite and non-negative"))
            }
            ModelKind::Knn(c) if c.k == 0 => Err(invalid("k", "must be at least 1")),
            ModelKind::Tree(c) if c.min_leaf == 0 => Err(invalid("min_leaf", "must be at least 1")),
            ModelKind::Forest(c) if c.n_trees == 0 => Err(invalid("n_trees", "must be at least 1")),
            ModelKind::Mlp(c) => {
                if c.hidden.contains(&0) {
                    return Err(invalid("hidden", "layer widths must be positive"));
                }
                Ok(c.train.validate()?)
            }
            ModelKind::Lstm(c) => {
                if c.hidden_size == 0 {
                    return Err(invalid("hidden_size", "must be at least 1"));
                }
                Ok(c.train.validate()?)
            }
            _ => Ok(()),
        }
    }
}

/// Pearson-correlation filter applied to the training windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EliminationConfig {
    pub target_corr_min: f64,
    pub pair_corr_max: f64,
}

impl EliminationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.target_corr_min) {
            return Err(invalid("target_corr_min", "must lie in [0, 1]"));
        }
        if !(self.pair_corr_max > 0.0 && self.pair_corr_max <= 1.0) {
            return Err(invalid("pair_corr_max", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Autoencoder applied per timestep; its codes replace the raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    /// `None` means `ceil(d / 2)`.
    pub bottleneck: Option<usize>,
    pub activation: Activation,
    pub train: TrainConfig,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self { bottleneck: None, activation: Activation::Tanh, train: TrainConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Preprocessing {
    pub standardize: bool,
    /// Drop training windows holding any value beyond this many standard deviations.
    pub outlier_z: Option<f64>,
    /// Subset of the series features; `None` keeps all.
    pub features: Option<Vec<String>>,
    pub feature_elimination: Option<EliminationConfig>,
    pub fusion: Option<FusionConfig>,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Self { standardize: true, outlier_z: None, features: None, feature_elimination: None, fusion: None }
    }
}

impl Preprocessing {
    pub fn validate(&self) -> Result<()> {
        if let Some(z) = self.outlier_z {
            if !(z > 0.0 && z.is_finite()) {
                return Err(invalid("outlier_z", format!("must be positive, got {z}")));
            }
        }
        if let Some(f) = &self.features {
            if f.is_empty() {
                return Err(invalid("features", "must name at least one feature"));
            }
        }
        if let Some(e) = &self.feature_elimination {
            e.validate()?;
        }
        if let Some(f) = &self.fusion {
            if f.bottleneck == Some(0) {
                return Err(invalid("bottleneck", "must be at least 1"));
            }
            f.train.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub model: ModelKind,
    /// Falls back to the run-level preprocessing when absent.
    #[serde(default)]
    pub preprocessing: Option<Preprocessing>,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>, model: ModelKind) -> Self {
        Self { name: name.into(), model, preprocessing: None }
    }

    pub fn effective_preprocessing(&self, fallback: &Preprocessing) -> Preprocessing {
        self.preprocessing.clone().unwrap_or_else(|| fallback.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "model names must be non-empty"));
        }
        self.model.validate()?;
        if let Some(p) = &self.preprocessing {
            p.validate()?;
        }
        Ok(())
    }
}
