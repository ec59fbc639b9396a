use std::num::NonZeroUsize;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{invalid, GradModel, NeuralError};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: NonZeroUsize,
    pub batch_size: NonZeroUsize,
    pub learning_rate: f64,
    /// Supplied by the caller from the run seed, never from a config file.
    #[serde(skip)]
    pub seed: u64,
    pub grad_clip: Option<f64>,
    pub shuffle_each_epoch: bool,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: NonZeroUsize::new(30).expect("nonzero"),
            batch_size: NonZeroUsize::new(32).expect("nonzero"),
            learning_rate: 0.01,
            seed: 0,
            grad_clip: Some(5.0),
            shuffle_each_epoch: true,
            validation_fraction: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(invalid("learning_rate", format!("must be a finite non-negative number, got {}", self.learning_rate)));
        }
        if let Some(c) = self.grad_clip {
            if !(c.is_finite() && c > 0.0) {
                return Err(invalid("grad_clip", format!("must be positive, got {c}")));
            }
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(invalid("validation_fraction", format!("must lie in [0, 1), got {}", self.validation_fraction)));
        }
        Ok(())
    }

    /// Number of trailing samples held out for validation.
    pub fn validation_count(&self, n: usize) -> usize {
        if self.validation_fraction == 0.0 {
            0
        } else {
            ((n as f64 * self.validation_fraction).floor() as usize).max(1)
        }
    }
}

/// Per-epoch losses expressed as squared error (for the autoencoder, the
/// mean over dimensions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainTrace {
    pub train_loss: Vec<f64>,
    pub val_loss: Option<Vec<f64>>,
}

pub fn train<M: GradModel>(model: M, data: &[M::Sample], cfg: &TrainConfig) -> Result<(M, TrainTrace), NeuralError> {
    train_with_callback(model, data, cfg, |_, _, _| {})
}

fn mean_loss<M: GradModel>(model: &M, data: &[M::Sample]) -> Result<f64, NeuralError> {
    let mut s = 0.0;
    for x in data {
        s += model.loss(x)?;
    }
    Ok(s / data.len() as f64 * M::LOSS_TO_MSE)
}

/// Mini-batch SGD. The epoch's training loss is the mean of the per-sample
/// losses seen during that epoch, each evaluated before its batch's update.
/// `on_epoch` is called after every epoch with the 1-based epoch index.
pub fn train_with_callback<M, F>(
    mut model: M,
    data: &[M::Sample],
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<(M, TrainTrace), NeuralError>
where
    M: GradModel,
    F: FnMut(usize, &M, &TrainTrace),
{
    cfg.validate()?;
    if data.is_empty() {
        return Err(invalid("data", "no training samples"));
    }
    let n_val = cfg.validation_count(data.len());
    if n_val >= data.len() {
        return Err(invalid("validation_fraction", "leaves no training samples"));
    }
    let (train_set, val_set) = data.split_at(data.len() - n_val);
    let bs = cfg.batch_size.get();
    if bs > train_set.len() {
        return Err(invalid("batch_size", format!("{bs} exceeds the {} training samples", train_set.len())));
    }
    let mut rng = rng_from_seed(derive_seed(cfg.seed, "shuffle"));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut grad = model.zeroed();
    let mut trace = TrainTrace { train_loss: Vec::new(), val_loss: (n_val > 0).then(Vec::new) };

    for epoch in 1..=cfg.epochs.get() {
        if cfg.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for batch in order.chunks(bs) {
            grad.fill_zero();
            for &i in batch {
                total += model.accumulate_grad(&train_set[i], &mut grad)?;
            }
            let scale = 1.0 / batch.len() as f64;
            let mut sq = 0.0;
            for t in grad.tensors_mut() {
                for g in t.iter_mut() {
                    *g *= scale;
                    sq += *g * *g;
                }
            }
            if !sq.is_finite() {
                return Err(NeuralError::Diverged { epoch });
            }
            let norm = sq.sqrt();
            let step = match cfg.grad_clip {
                Some(c) if norm > c => cfg.learning_rate * c / norm,
                _ => cfg.learning_rate,
            };
            for (p, g) in model.tensors_mut().into_iter().zip(grad.tensors()) {
                for (pv, gv) in p.iter_mut().zip(g) {
                    *pv -= step * gv;
                }
            }
        }
        let epoch_loss = total / train_set.len() as f64 * M::LOSS_TO_MSE;
        if !epoch_loss.is_finite() || !model.all_finite() {
            return Err(NeuralError::Diverged { epoch });
        }
        trace.train_loss.push(epoch_loss);
        if let Some(v) = trace.val_loss.as_mut() {
            let vl = mean_loss(&model, val_set)?;
            if !vl.is_finite() {
                return Err(NeuralError::Diverged { epoch });
            }
            v.push(vl);
        }
        on_epoch(epoch, &model, &trace);
    }
    Ok((model, trace))
}
