use serde::{Deserialize, Serialize};

use super::{fit_preprocessing, invalid, kfold_split, Fitter, ModelSpec, PreprocessState, Preprocessing, Result};
use crate::dataset::WindowedSeries;
use crate::metrics::{bundle, MetricsBundle, PredictionPair, ZeroPolicy};
use crate::rng::{derive_indexed, derive_seed};

/// Fits preprocessing on `train`, fits the model on the transformed windows and
/// scores the test windows in volts.
pub fn evaluate_split<F: Fitter + ?Sized>(
    fitter: &F,
    prep: &Preprocessing,
    train: &WindowedSeries,
    test: &WindowedSeries,
    seed: u64,
    policy: ZeroPolicy,
) -> Result<(MetricsBundle, PreprocessState)> {
    let (state, train_t) = fit_preprocessing(prep, train, seed)?;
    let test_t = state.transform(test)?;
    let raw = fitter.fit_predict(&train_t, &test_t, seed)?;
    let predicted: Vec<f64> = raw.into_iter().map(|z| state.target_to_volts(z)).collect();
    let pair = PredictionPair::new(test.targets(), predicted)?;
    Ok((bundle(&pair, policy)?, state))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub metrics: Option<MetricsBundle>,
    pub error: Option<String>,
}

impl ReportRow {
    pub fn from_result(name: &str, r: Result<MetricsBundle>) -> Self {
        match r {
            Ok(m) => Self { name: name.to_string(), metrics: Some(m), error: None },
            Err(e) => Self { name: name.to_string(), metrics: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub n_train: usize,
    pub n_test: usize,
    pub features: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
    pub fingerprint: DatasetFingerprint,
    pub timestamp: Option<String>,
}

impl ComparisonReport {
    pub fn all_failed(&self) -> bool {
        self.rows.iter().all(|r| r.metrics.is_none())
    }
}

fn check_unique(names: impl Iterator<Item = String>) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for n in names {
        if !seen.insert(n.clone()) {
            return Err(invalid("name", format!("duplicate model name `{n}`")));
        }
    }
    Ok(())
}

/// Every spec is fitted on `train` and scored on `test`; a failing model
/// yields a row with an error instead of aborting the comparison.
pub fn compare_models(
    specs: &[ModelSpec],
    fallback: &Preprocessing,
    train: &WindowedSeries,
    test: &WindowedSeries,
    seed: u64,
    policy: ZeroPolicy,
) -> Result<ComparisonReport> {
    if specs.is_empty() {
        return Err(invalid("models", "at least one model spec is required"));
    }
    check_unique(specs.iter().map(|s| s.name.clone()))?;
    let rows = specs
        .iter()
        .map(|s| {
            let r = s.validate().and_then(|_| {
                let prep = s.effective_preprocessing(fallback);
                let model_seed = derive_seed(seed, &format!("model:{}", s.name));
                evaluate_split(&s.model, &prep, train, test, model_seed, policy).map(|(m, _)| m)
            });
            ReportRow::from_result(&s.name, r)
        })
        .collect();
    Ok(ComparisonReport {
        rows,
        fingerprint: DatasetFingerprint {
            n_train: train.len(),
            n_test: test.len(),
            features: train.feature_names.clone(),
            seed,
        },
        timestamp: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub mape: Option<f64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let sd = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (m, sd)
}

impl MetricSummary {
    /// Mean and sample standard deviation across folds. MAPE uses the folds
    /// where it is defined.
    pub fn from_bundles(b: &[MetricsBundle]) -> (Self, Self) {
        let col = |f: fn(&MetricsBundle) -> f64| mean_std(&b.iter().map(f).collect::<Vec<_>>());
        let (mse, mse_sd) = col(|x| x.mse);
        let (rmse, rmse_sd) = col(|x| x.rmse);
        let (mae, mae_sd) = col(|x| x.mae);
        let mapes: Vec<f64> = b.iter().filter_map(|x| x.mape).collect();
        let (mape, mape_sd) = if mapes.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_std(&mapes);
            (Some(m), Some(s))
        };
        (
            Self { mse, rmse, mae, mape },
            Self { mse: mse_sd, rmse: rmse_sd, mae: mae_sd, mape: mape_sd },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: MetricsBundle,
    pub preprocessing: PreprocessState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub model: String,
    pub k: usize,
    pub folds: Vec<FoldResult>,
    pub mean: MetricSummary,
    pub std: MetricSummary,
}

/// K rounds, each holding out one fold. All preprocessing is refitted on the
/// remaining folds only.
pub fn cross_validate_with<F: Fitter + ?Sized>(
    name: &str,
    fitter: &F,
    prep: &Preprocessing,
    series: &WindowedSeries,
    k: usize,
    seed: u64,
    policy: ZeroPolicy,
) -> Result<CvReport> {
    let plan = kfold_split(series.len(), k, derive_seed(seed, "folds"))?;
    let mut folds = Vec::with_capacity(k);
    for j in 0..k {
        let train_idx = plan.train_indices(j);
        let test_idx = plan.test_indices(j);
        if train_idx.is_empty() || test_idx.is_empty() {
            return Err(super::EvalError::Plan(format!("fold {j} has an empty side")));
        }
        let train = series.subset(&train_idx);
        let test = series.subset(&test_idx);
        let (metrics, state) = evaluate_split(fitter, prep, &train, &test, derive_indexed(seed, j as u64), policy)?;
        folds.push(FoldResult { fold: j, n_train: train.len(), n_test: test.len(), metrics, preprocessing: state });
    }
    let bundles: Vec<MetricsBundle> = folds.iter().map(|f| f.metrics).collect();
    let (mean, std) = MetricSummary::from_bundles(&bundles);
    Ok(CvReport { model: name.to_string(), k, folds, mean, std })
}

pub fn cross_validate(
    spec: &ModelSpec,
    fallback: &Preprocessing,
    series: &WindowedSeries,
    k: usize,
    seed: u64,
    policy: ZeroPolicy,
) -> Result<CvReport> {
    spec.validate()?;
    let prep = spec.effective_preprocessing(fallback);
    let model_seed = derive_seed(seed, &format!("model:{}", spec.name));
    cross_validate_with(&spec.name, &spec.model, &prep, series, k, model_seed, policy)
}
