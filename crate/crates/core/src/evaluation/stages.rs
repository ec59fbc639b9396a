use std::num::NonZeroUsize;

use serde::{Deserialize, Serialize};

use super::{
    evaluate_split, fit_preprocessing, invalid, to_labeled, to_sequences, ComparisonReport, DatasetFingerprint,
    FittedModel, ModelKind, ModelSpec, Preprocessing, ReportRow, Result,
};
use crate::dataset::WindowedSeries;
use crate::metrics::{bundle, MetricsBundle, PredictionPair, ZeroPolicy};
use crate::neural::{train_with_callback, GradModel, LstmParams, MlpParams, NeuralError, TrainConfig};
use crate::rng::derive_seed;

/// Hyperparameter grid searched on a validation split carved from the end of
/// the training windows. Empty lists keep the spec's own value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tuning {
    pub epochs: Vec<usize>,
    pub batch_sizes: Vec<usize>,
    pub learning_rates: Vec<f64>,
    pub validation_fraction: f64,
    /// Start from the epochs, batch size and learning rate chosen by the previous stage.
    pub inherit_previous: bool,
}

impl Default for Tuning {
    fn default() -> Self {
        Self {
            epochs: Vec::new(),
            batch_sizes: Vec::new(),
            learning_rates: Vec::new(),
            validation_fraction: 0.2,
            inherit_previous: false,
        }
    }
}

impl Tuning {
    fn validate(&self) -> Result<()> {
        if self.epochs.contains(&0) {
            return Err(invalid("epochs", "grid values must be positive"));
        }
        if self.batch_sizes.contains(&0) {
            return Err(invalid("batch_sizes", "grid values must be positive"));
        }
        if self.learning_rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(invalid("learning_rates", "grid values must be finite and non-negative"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(invalid("validation_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub spec: ModelSpec,
    #[serde(default)]
    pub tuning: Option<Tuning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagePlan {
    pub base: StageSpec,
    pub stage1: StageSpec,
    pub stage2: StageSpec,
}

impl StagePlan {
    pub fn stages(&self) -> [&StageSpec; 3] {
        [&self.base, &self.stage1, &self.stage2]
    }

    pub fn validate(&self) -> Result<()> {
        let tag = self.base.spec.model.tag();
        let mut names = std::collections::BTreeSet::new();
        for s in self.stages() {
            s.spec.validate()?;
            if s.spec.model.tag() != tag {
                return Err(invalid("stages", format!("all stages must use `{tag}`, found `{}`", s.spec.model.tag())));
            }
            if !names.insert(s.spec.name.clone()) {
                return Err(invalid("stages", format!("duplicate stage name `{}`", s.spec.name)));
            }
            if let Some(t) = &s.tuning {
                t.validate()?;
                if s.spec.model.train_config().is_none() {
                    return Err(invalid("tuning", format!("`{tag}` has no epochs or batch size to tune")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSelection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Validation MSE in the model's target space.
    pub val_mse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub name: String,
    pub selection: Option<StageSelection>,
    pub grid: Vec<GridPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagesReport {
    pub report: ComparisonReport,
    pub stages: Vec<StageOutcome>,
}

fn sorted_or(values: &[usize], fallback: usize) -> Vec<usize> {
    let mut v = if values.is_empty() { vec![fallback] } else { values.to_vec() };
    v.sort_unstable();
    v.dedup();
    v
}

/// One training run per (batch, rate) pair, reading the validation loss at
/// each epoch in the grid from the same run.
fn grid_search<M: GradModel>(
    init: &M,
    samples: &[M::Sample],
    base: &TrainConfig,
    tuning: &Tuning,
) -> Vec<GridPoint> {
    let epochs = sorted_or(&tuning.epochs, base.epochs.get());
    let batches = sorted_or(&tuning.batch_sizes, base.batch_size.get());
    let mut rates = if tuning.learning_rates.is_empty() { vec![base.learning_rate] } else { tuning.learning_rates.clone() };
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    let max_e = *epochs.last().expect("non-empty");

    let mut points = Vec::new();
    for &b in &batches {
        for &r in &rates {
            let cfg = TrainConfig {
                epochs: NonZeroUsize::new(max_e).expect("positive"),
                batch_size: NonZeroUsize::new(b).expect("positive"),
                learning_rate: r,
                validation_fraction: tuning.validation_fraction,
                ..*base
            };
            let mut seen: Vec<(usize, f64)> = Vec::new();
            let res = train_with_callback(init.clone(), samples, &cfg, |e, _, t| {
                if epochs.contains(&e) {
                    let v = t.val_loss.as_ref().and_then(|v| v.last().copied()).unwrap_or(f64::NAN);
                    seen.push((e, v));
                }
            });
            let err = res.err().map(|e: NeuralError| e.to_string());
            for &e in &epochs {
                let val = seen.iter().find(|(se, _)| *se == e).map(|(_, v)| *v).filter(|v| v.is_finite());
                let error = if val.is_none() { err.clone().or_else(|| Some("no validation loss".into())) } else { None };
                points.push(GridPoint { epochs: e, batch_size: b, learning_rate: r, val_mse: val, error });
            }
        }
    }
    points
}

/// Lowest validation MSE; ties go to fewer epochs, then smaller batch, then
/// smaller learning rate.
fn select(points: &[GridPoint]) -> Option<StageSelection> {
    let mut order: Vec<&GridPoint> = points.iter().filter(|p| p.val_mse.is_some()).collect();
    order.sort_by(|a, b| {
        a.epochs.cmp(&b.epochs).then(a.batch_size.cmp(&b.batch_size)).then(a.learning_rate.total_cmp(&b.learning_rate))
    });
    let mut best: Option<&GridPoint> = None;
    for p in order {
        if best.is_none_or(|b| p.val_mse < b.val_mse) {
            best = Some(p);
        }
    }
    best.map(|p| StageSelection { epochs: p.epochs, batch_size: p.batch_size, learning_rate: p.learning_rate })
}

fn apply_selection(kind: &mut ModelKind, s: &StageSelection) {
    if let Some(c) = kind.train_config_mut() {
        c.epochs = NonZeroUsize::new(s.epochs).expect("positive");
        c.batch_size = NonZeroUsize::new(s.batch_size).expect("positive");
        c.learning_rate = s.learning_rate;
    }
}

fn current_selection(kind: &ModelKind) -> Option<StageSelection> {
    kind.train_config().map(|c| StageSelection {
        epochs: c.epochs.get(),
        batch_size: c.batch_size.get(),
        learning_rate: c.learning_rate,
    })
}

struct StageResult {
    metrics: MetricsBundle,
    selection: Option<StageSelection>,
    grid: Vec<GridPoint>,
}

fn run_stage(
    stage: &StageSpec,
    previous: Option<&StageSelection>,
    fallback: &Preprocessing,
    train: &WindowedSeries,
    test: &WindowedSeries,
    seed: u64,
    policy: ZeroPolicy,
) -> Result<StageResult> {
    let prep = stage.spec.effective_preprocessing(fallback);
    let mut kind = stage.spec.model.clone();
    let Some(tuning) = &stage.tuning else {
        let (metrics, _) = evaluate_split(&kind, &prep, train, test, seed, policy)?;
        return Ok(StageResult { metrics, selection: current_selection(&kind), grid: Vec::new() });
    };
    if let (true, Some(p)) = (tuning.inherit_previous, previous) {
        apply_selection(&mut kind, p);
    }
    let (state, train_t) = fit_preprocessing(&prep, train, seed)?;
    let fit_seed = derive_seed(seed, "fit");
    let grid = match &kind {
        ModelKind::Lstm(c) => {
            let init = LstmParams::init(train_t.n_features(), c.hidden_size, fit_seed);
            grid_search(&init, &to_sequences(&train_t), &TrainConfig { seed: fit_seed, ..c.train }, tuning)
        }
        ModelKind::Mlp(c) => {
            let init = MlpParams::init(train_t.window_length * train_t.n_features(), &c.hidden, c.activation, fit_seed);
            grid_search(&init, &to_labeled(&train_t), &TrainConfig { seed: fit_seed, ..c.train }, tuning)
        }
        other => return Err(invalid("tuning", format!("`{}` cannot be tuned", other.tag()))),
    };
    let selection = select(&grid).ok_or_else(|| {
        let first = grid.iter().find_map(|p| p.error.clone()).unwrap_or_default();
        super::EvalError::Plan(format!("every grid point failed: {first}"))
    })?;
    apply_selection(&mut kind, &selection);
    let (model, _) = FittedModel::fit(&kind, &train_t, seed)?;
    let test_t = state.transform(test)?;
    let predicted = model.predict_series(&test_t)?.into_iter().map(|z| state.target_to_volts(z)).collect();
    let metrics = bundle(&PredictionPair::new(test.targets(), predicted)?, policy)?;
    Ok(StageResult { metrics, selection: Some(selection), grid })
}

/// Runs base, stage1 and stage2 in order on a shared split and seed. A stage
/// that fails becomes a row with an error.
pub fn run_stages(
    plan: &StagePlan,
    fallback: &Preprocessing,
    train: &WindowedSeries,
    test: &WindowedSeries,
    seed: u64,
    policy: ZeroPolicy,
) -> Result<StagesReport> {
    plan.validate()?;
    let stage_seed = derive_seed(seed, "stages");
    let mut rows = Vec::with_capacity(3);
    let mut outcomes = Vec::with_capacity(3);
    let mut previous: Option<StageSelection> = None;
    for stage in plan.stages() {
        let name = &stage.spec.name;
        match run_stage(stage, previous.as_ref(), fallback, train, test, stage_seed, policy) {
            Ok(r) => {
                rows.push(ReportRow::from_result(name, Ok(r.metrics)));
                previous = r.selection;
                outcomes.push(StageOutcome { name: name.clone(), selection: r.selection, grid: r.grid });
            }
            Err(e) => {
                rows.push(ReportRow::from_result(name, Err(e)));
                previous = None;
                outcomes.push(StageOutcome { name: name.clone(), selection: None, grid: Vec::new() });
            }
        }
    }
    let report = ComparisonReport {
        rows,
        fingerprint: DatasetFingerprint {
            n_train: train.len(),
            n_test: test.len(),
            features: train.feature_names.clone(),
            seed,
        },
        timestamp: None,
    };
    Ok(StagesReport { report, stages: outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gp(e: usize, b: usize, r: f64, v: Option<f64>) -> GridPoint {
        GridPoint { epochs: e, batch_size: b, learning_rate: r, val_mse: v, error: None }
    }

    #[test]
    fn ties_prefer_fewer_epochs_then_smaller_batch() {
        let pts = vec![gp(60, 16, 0.01, Some(1.0)), gp(30, 32, 0.01, Some(1.0)), gp(30, 16, 0.03, Some(1.0)), gp(30, 16, 0.01, None)];
        let s = select(&pts).unwrap();
        assert_eq!((s.epochs, s.batch_size, s.learning_rate), (30, 16, 0.03));
        let pts = vec![gp(120, 64, 0.01, Some(0.5)), gp(30, 16, 0.01, Some(0.6))];
        assert_eq!(select(&pts).unwrap().epochs, 120);
        assert!(select(&[gp(30, 16, 0.1, None)]).is_none());
    }
}
