use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{invalid, BaselineError, FittedBaseline, FlatDataset};
use crate::rng::rng_from_seed;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self { learning_rate: 0.01, epochs: 50, batch_size: 32 }
    }
}

/// Linear model trained by mini-batch SGD on the mean squared error, starting
/// from all-zero weights. Each epoch visits the rows in a fresh seeded order;
/// the recorded trace is the full-data MSE after every epoch.
pub fn sgd_linear_fit(data: &FlatDataset, cfg: &SgdConfig, seed: u64) -> Result<FittedBaseline, BaselineError> {
    if !(cfg.learning_rate >= 0.0) || !cfg.learning_rate.is_finite() {
        return Err(invalid("learning_rate", "must be a non-negative finite number"));
    }
    if cfg.epochs == 0 {
        return Err(invalid("epochs", "must be at least 1"));
    }
    if cfg.batch_size == 0 {
        return Err(invalid("batch_size", "must be at least 1"));
    }
    let (n, d) = (data.n(), data.d());
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = vec![0.0; d];
    let mut trace = Vec::with_capacity(cfg.epochs);
    let predict = |w: &[f64], b: f64, x: &[f64]| b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut gb = 0.0;
            for &i in batch {
                let x = data.row(i);
                let e = predict(&w, b, x) - data.y()[i];
                gb += e;
                for (g, v) in grad.iter_mut().zip(x) {
                    *g += e * v;
                }
            }
            let scale = cfg.learning_rate / batch.len() as f64;
            for (wj, g) in w.iter_mut().zip(&grad) {
                *wj -= scale * g;
            }
            b -= scale * gb;
        }
        let loss = (0..n).map(|i| (predict(&w, b, data.row(i)) - data.y()[i]).powi(2)).sum::<f64>() / n as f64;
        if !loss.is_finite() {
            return Err(BaselineError::Diverged { epoch, learning_rate: cfg.learning_rate });
        }
        trace.push(loss);
    }
    Ok(FittedBaseline::SgdLinear { weights: Tensor::vector(w), intercept: b, config: *cfg, seed, loss_trace: trace })
}
