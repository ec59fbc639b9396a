//! Classical regressors used as comparison points for the LSTM.
//!
//! All of them consume a [`FlatDataset`]: windows flattened timestep-major
//! into one row each.

mod forest;
mod knn;
mod linear;
mod sgd;
mod tree;

pub use forest::{forest_fit, ForestConfig};
pub use knn::{knn_fit, knn_predict, KnnConfig};
pub use linear::{linear_fit, solve_linear_system, LinearConfig};
pub use sgd::{sgd_linear_fit, SgdConfig};
pub use tree::{best_split, tree_fit, Node, RegressionTree, SplitCandidate, TreeConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::WindowedSeries;
use crate::tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("invalid parameter `{key}`: {message}")]
    InvalidParameter { key: String, message: String },
    #[error("normal equations are singular; use ridge_lambda > 0")]
    Singular,
    #[error("SGD diverged at epoch {epoch} with learning rate {learning_rate}")]
    Diverged { epoch: usize, learning_rate: f64 },
    #[error("shape error: model expects {expected} features, got {got}")]
    Shape { expected: usize, got: usize },
}

pub(crate) fn invalid(key: &str, message: impl Into<String>) -> BaselineError {
    BaselineError::InvalidParameter { key: key.to_string(), message: message.into() }
}

/// Row-major `n x d` feature matrix with its targets.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatDataset {
    x: Tensor,
    y: Vec<f64>,
}

impl FlatDataset {
    pub fn new(rows: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self, BaselineError> {
        if rows.is_empty() {
            return Err(BaselineError::InvalidData("no rows".into()));
        }
        if rows.len() != y.len() {
            return Err(BaselineError::InvalidData(format!("{} rows but {} targets", rows.len(), y.len())));
        }
        let d = rows[0].len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(BaselineError::InvalidData("rows must share a non-zero width".into()));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(BaselineError::InvalidData("non-finite entry".into()));
        }
        let n = y.len();
        Ok(Self { x: Tensor::matrix(n, d, data), y })
    }

    /// Flattens each window timestep-major.
    pub fn from_series(series: &WindowedSeries) -> Result<Self, BaselineError> {
        Self::new(series.windows.iter().map(|w| w.flatten()).collect(), series.targets())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn x(&self) -> &Tensor {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.x.get(i, j)).collect()
    }
}

/// A trained baseline. Serializes with a `variant` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum FittedBaseline {
    Linear { weights: Tensor, intercept: f64, config: LinearConfig },
    SgdLinear { weights: Tensor, intercept: f64, config: SgdConfig, seed: u64, loss_trace: Vec<f64> },
    Knn { x: Tensor, y: Vec<f64>, config: KnnConfig },
    Tree { tree: RegressionTree, config: TreeConfig },
    Forest { trees: Vec<RegressionTree>, config: ForestConfig, seed: u64 },
}

impl FittedBaseline {
    pub fn n_features(&self) -> usize {
        match self {
            FittedBaseline::Linear { weights, .. } | FittedBaseline::SgdLinear { weights, .. } => weights.len(),
            FittedBaseline::Knn { x, .. } => x.cols(),
            FittedBaseline::Tree { tree, .. } => tree.n_features,
            FittedBaseline::Forest { trees, .. } => trees[0].n_features,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            FittedBaseline::Linear { .. } => "linear",
            FittedBaseline::SgdLinear { .. } => "sgd_linear",
            FittedBaseline::Knn { .. } => "knn",
            FittedBaseline::Tree { .. } => "tree",
            FittedBaseline::Forest { .. } => "forest",
        }
    }

    pub fn predict(&self, row: &[f64]) -> Result<f64, BaselineError> {
        let d = self.n_features();
        if row.len() != d {
            return Err(BaselineError::Shape { expected: d, got: row.len() });
        }
        Ok(match self {
            FittedBaseline::Linear { weights, intercept, .. } | FittedBaseline::SgdLinear { weights, intercept, .. } => {
                intercept + weights.data().iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
            }
            FittedBaseline::Knn { .. } => knn_predict(self, row)?,
            FittedBaseline::Tree { tree, .. } => tree.predict(row),
            FittedBaseline::Forest { trees, .. } => {
                trees.iter().map(|t| t.predict(row)).sum::<f64>() / trees.len() as f64
            }
        })
    }
}

/// Row-wise predictions for an `m x d` probe matrix (`m` may be zero).
pub fn predict_all(model: &FittedBaseline, rows: &[Vec<f64>]) -> Result<Vec<f64>, BaselineError> {
    rows.iter().map(|r| model.predict(r)).collect()
}
