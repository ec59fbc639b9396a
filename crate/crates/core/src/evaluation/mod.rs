//! Cross-validation, multi-model comparison, feature elimination and the
//! three-stage tuning ladder.

mod compare;
mod features;
mod folds;
mod pipeline;
mod spec;
mod stages;

pub use compare::{
    compare_models, cross_validate, cross_validate_with, evaluate_split, ComparisonReport, CvReport, DatasetFingerprint,
    FoldResult, MetricSummary, ReportRow,
};
pub use features::{feature_eliminate, pearson, EliminationReport, FeatureScore};
pub use folds::{kfold_split, FoldPlan};
pub use pipeline::{
    fit_pipeline, fit_preprocessing, to_flat, to_labeled, to_sequences, FittedModel, Fitter, PreprocessState,
    TrainedPipeline,
};
pub use spec::{
    EliminationConfig, FusionConfig, LstmConfig, MlpConfig, ModelKind, ModelSpec, Preprocessing, DEFAULT_K,
};
pub use stages::{run_stages, GridPoint, StageOutcome, StagePlan, StageSelection, StageSpec, StagesReport, Tuning};

use thiserror::Error;

use crate::baselines::BaselineError;
use crate::dataset::DatasetError;
use crate::metrics::MetricsError;
use crate::neural::NeuralError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid parameter `{key}`: {message}")]
    InvalidParameter { key: String, message: String },
    #[error("plan error: {0}")]
    Plan(String),
}

impl EvalError {
    /// True when the underlying cause is a numerical divergence during training.
    pub fn is_divergence(&self) -> bool {
        matches!(self, EvalError::Neural(NeuralError::Diverged { .. }))
            || matches!(self, EvalError::Baseline(BaselineError::Diverged { .. }))
    }
}

pub(crate) fn invalid(key: &str, message: impl Into<String>) -> EvalError {
    EvalError::InvalidParameter { key: key.to_string(), message: message.into() }
}

pub type Result<T> = std::result::Result<T, EvalError>;
