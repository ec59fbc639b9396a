use serde::{Deserialize, Serialize};

use super::{feature_eliminate, invalid, EliminationReport, EvalError, ModelKind, ModelSpec, Preprocessing, Result};
use crate::baselines::{
    forest_fit, knn_fit, linear_fit, sgd_linear_fit, tree_fit, FittedBaseline, FlatDataset,
};
use crate::dataset::{fit_standardizer_columns, StandardizationParams, Window, WindowedSeries};
use crate::neural::{
    encode, train as train_model, AutoencoderParams, GradModel, Labeled, LstmParams, MlpParams, SeqSample, TrainTrace,
};
use crate::rng::derive_seed;

const TARGET_NAME: &str = "target";

/// Everything fitted on the training side before the model sees the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessState {
    /// Raw feature names the model consumes, after selection and elimination.
    pub input_features: Vec<String>,
    pub elimination: Option<EliminationReport>,
    pub outliers_removed: usize,
    pub standardizer: Option<StandardizationParams>,
    pub target_scaler: Option<StandardizationParams>,
    pub fusion: Option<AutoencoderParams>,
}

impl PreprocessState {
    /// Applies the fitted transforms to raw windows. Targets move into the
    /// model's space as well.
    pub fn transform(&self, series: &WindowedSeries) -> Result<WindowedSeries> {
        let mut out = series.select_features(&self.input_features)?;
        if let Some(s) = &self.standardizer {
            for w in &mut out.windows {
                for step in &mut w.steps {
                    for (j, v) in step.iter_mut().enumerate() {
                        *v = s.forward(j, *v);
                    }
                }
            }
        }
        if let Some(t) = &self.target_scaler {
            for w in &mut out.windows {
                w.target = t.forward(0, w.target);
            }
        }
        if let Some(ae) = &self.fusion {
            for w in &mut out.windows {
                w.steps = w.steps.iter().map(|s| encode(ae, s)).collect::<std::result::Result<_, _>>()?;
            }
            out.feature_names = (0..ae.bottleneck()).map(|k| format!("fused_{k}")).collect();
        }
        Ok(out)
    }

    pub fn target_to_volts(&self, z: f64) -> f64 {
        match &self.target_scaler {
            Some(t) => t.inverse(0, z),
            None => z,
        }
    }
}

fn all_values(series: &WindowedSeries, j: usize) -> Vec<f64> {
    series.windows.iter().flat_map(|w| w.steps.iter().map(move |s| s[j])).collect()
}

fn drop_outlier_windows(series: &WindowedSeries, z: f64) -> Result<(WindowedSeries, usize)> {
    let d = series.n_features();
    let mut columns: Vec<Vec<f64>> = (0..d).map(|j| all_values(series, j)).collect();
    columns.push(series.targets());
    let bounds: Vec<Option<(f64, f64)>> = columns
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() / c.len() as f64;
            let var = c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (c.len().max(2) - 1) as f64;
            (var > 0.0).then(|| (m, var.sqrt()))
        })
        .collect();
    let beyond = |j: usize, v: f64| bounds[j].is_some_and(|(m, s)| ((v - m) / s).abs() > z);
    let keep: Vec<usize> = (0..series.len())
        .filter(|&i| {
            let w = &series.windows[i];
            !beyond(d, w.target) && !w.steps.iter().any(|s| s.iter().enumerate().any(|(j, &v)| beyond(j, v)))
        })
        .collect();
    if keep.len() < 2 {
        return Err(invalid("outlier_z", format!("threshold {z} leaves {} training windows", keep.len())));
    }
    Ok((series.subset(&keep), series.len() - keep.len()))
}

fn last_step_dataset(series: &WindowedSeries) -> Result<FlatDataset> {
    let rows = series.windows.iter().map(|w| w.steps.last().expect("non-empty window").clone()).collect();
    Ok(FlatDataset::new(rows, series.targets())?)
}

/// Fits preprocessing on `train` in the order: feature selection, outlier
/// filtering, elimination, standardization, fusion. Returns the state and the
/// transformed (and filtered) training series.
pub fn fit_preprocessing(prep: &Preprocessing, train: &WindowedSeries, seed: u64) -> Result<(PreprocessState, WindowedSeries)> {
    prep.validate()?;
    let mut work = match &prep.features {
        Some(f) => train.select_features(f)?,
        None => train.clone(),
    };
    let mut outliers_removed = 0;
    if let Some(z) = prep.outlier_z {
        let (kept, dropped) = drop_outlier_windows(&work, z)?;
        work = kept;
        outliers_removed = dropped;
    }
    let mut elimination = None;
    if let Some(cfg) = &prep.feature_elimination {
        let rep = feature_eliminate(&last_step_dataset(&work)?, &work.feature_names, cfg)?;
        work = work.select_features(&rep.retained)?;
        elimination = Some(rep);
    }
    let (standardizer, target_scaler) = if prep.standardize {
        let cols: Vec<Vec<f64>> = (0..work.n_features()).map(|j| all_values(&work, j)).collect();
        let s = fit_standardizer_columns(&work.feature_names, &cols)?;
        let t = fit_standardizer_columns(&[TARGET_NAME.to_string()], &[work.targets()])?;
        (Some(s), Some(t))
    } else {
        (None, None)
    };
    let mut state = PreprocessState {
        input_features: work.feature_names.clone(),
        elimination,
        outliers_removed,
        standardizer,
        target_scaler,
        fusion: None,
    };
    if let Some(f) = &prep.fusion {
        let scaled = state.transform(&work)?;
        let d = scaled.n_features();
        let h = f.bottleneck.unwrap_or_else(|| AutoencoderParams::default_bottleneck(d));
        let fusion_seed = derive_seed(seed, "fusion");
        let ae = AutoencoderParams::init(d, h, f.activation, fusion_seed)?;
        let samples: Vec<Vec<f64>> = scaled.windows.iter().flat_map(|w| w.steps.iter().cloned()).collect();
        let cfg = crate::neural::TrainConfig { seed: fusion_seed, ..f.train };
        let (ae, _) = train_model(ae, &samples, &cfg)?;
        state.fusion = Some(ae);
    }
    let transformed = state.transform(&work)?;
    Ok((state, transformed))
}

pub fn to_flat(series: &WindowedSeries) -> Result<FlatDataset> {
    Ok(FlatDataset::from_series(series)?)
}

pub fn to_labeled(series: &WindowedSeries) -> Vec<Labeled> {
    series.windows.iter().map(|w| Labeled { x: w.flatten(), y: w.target }).collect()
}

pub fn to_sequences(series: &WindowedSeries) -> Vec<SeqSample> {
    series.windows.iter().map(|w| SeqSample { steps: w.steps.clone(), target: w.target }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedModel {
    Baseline { model: FittedBaseline },
    Mlp { params: MlpParams },
    Lstm { params: LstmParams },
}

impl FittedModel {
    pub fn predict(&self, w: &Window) -> Result<f64> {
        Ok(match self {
            FittedModel::Baseline { model } => model.predict(&w.flatten())?,
            FittedModel::Mlp { params } => params.predict(&w.flatten())?,
            FittedModel::Lstm { params } => params.predict(&w.steps)?,
        })
    }

    pub fn predict_series(&self, series: &WindowedSeries) -> Result<Vec<f64>> {
        series.windows.iter().map(|w| self.predict(w)).collect()
    }

    /// Fits `kind` on an already transformed series.
    pub fn fit(kind: &ModelKind, train_set: &WindowedSeries, seed: u64) -> Result<(Self, Option<TrainTrace>)> {
        kind.validate()?;
        if train_set.is_empty() {
            return Err(EvalError::Plan("empty training set".into()));
        }
        let fit_seed = derive_seed(seed, "fit");
        let out = match kind {
            ModelKind::Linear(c) => (FittedModel::Baseline { model: linear_fit(&to_flat(train_set)?, c)? }, None),
            ModelKind::SgdLinear(c) => {
                (FittedModel::Baseline { model: sgd_linear_fit(&to_flat(train_set)?, c, fit_seed)? }, None)
            }
            ModelKind::Knn(c) => (FittedModel::Baseline { model: knn_fit(&to_flat(train_set)?, c)? }, None),
            ModelKind::Tree(c) => (FittedModel::Baseline { model: tree_fit(&to_flat(train_set)?, c) }, None),
            ModelKind::Forest(c) => {
                (FittedModel::Baseline { model: forest_fit(&to_flat(train_set)?, c, fit_seed)? }, None)
            }
            ModelKind::Mlp(c) => {
                let d = train_set.window_length * train_set.n_features();
                let init = MlpParams::init(d, &c.hidden, c.activation, fit_seed);
                let cfg = crate::neural::TrainConfig { seed: fit_seed, ..c.train };
                let (p, trace) = train_model(init, &to_labeled(train_set), &cfg)?;
                (FittedModel::Mlp { params: p }, Some(trace))
            }
            ModelKind::Lstm(c) => {
                let init = LstmParams::init(train_set.n_features(), c.hidden_size, fit_seed);
                let cfg = crate::neural::TrainConfig { seed: fit_seed, ..c.train };
                let (p, trace) = train_model(init, &to_sequences(train_set), &cfg)?;
                (FittedModel::Lstm { params: p }, Some(trace))
            }
        };
        Ok(out)
    }

    pub fn n_params(&self) -> Option<usize> {
        match self {
            FittedModel::Baseline { .. } => None,
            FittedModel::Mlp { params } => Some(params.n_params()),
            FittedModel::Lstm { params } => Some(params.n_params()),
        }
    }
}

/// Something that can be fitted on preprocessed windows and predict others.
/// Predictions are in the same space as the training targets.
pub trait Fitter {
    fn fit_predict(&self, train: &WindowedSeries, test: &WindowedSeries, seed: u64) -> Result<Vec<f64>>;
}

impl Fitter for ModelKind {
    fn fit_predict(&self, train: &WindowedSeries, test: &WindowedSeries, seed: u64) -> Result<Vec<f64>> {
        let (m, _) = FittedModel::fit(self, train, seed)?;
        m.predict_series(test)
    }
}

/// A fitted model together with the preprocessing it was trained behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub name: String,
    pub preprocessing: PreprocessState,
    pub model: FittedModel,
    #[serde(skip)]
    pub trace: Option<TrainTrace>,
}

impl TrainedPipeline {
    /// Predictions for raw windows, in volts.
    pub fn predict(&self, series: &WindowedSeries) -> Result<Vec<f64>> {
        let t = self.preprocessing.transform(series)?;
        Ok(self.model.predict_series(&t)?.into_iter().map(|z| self.preprocessing.target_to_volts(z)).collect())
    }
}

pub fn fit_pipeline(spec: &ModelSpec, fallback: &Preprocessing, train: &WindowedSeries, seed: u64) -> Result<TrainedPipeline> {
    spec.validate()?;
    let prep = spec.effective_preprocessing(fallback);
    let (state, transformed) = fit_preprocessing(&prep, train, seed)?;
    let (model, trace) = FittedModel::fit(&spec.model, &transformed, seed)?;
    Ok(TrainedPipeline { name: spec.name.clone(), preprocessing: state, model, trace })
}
