use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DatasetError, Result, WindowedSeries};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    #[default]
    Chronological,
    Shuffled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub mode: SplitMode,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_fraction: 0.8, mode: SplitMode::Chronological, seed: 0 }
    }
}

impl SplitSpec {
    /// Train/test window indices for a series of `n` windows.
    pub fn indices(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(DatasetError::InvalidParameter(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        let n_train = (n as f64 * self.train_fraction).floor() as usize;
        if n_train == 0 || n_train >= n {
            return Err(DatasetError::DegenerateSplit { train: n_train, test: n.saturating_sub(n_train) });
        }
        let mut order: Vec<usize> = (0..n).collect();
        if self.mode == SplitMode::Shuffled {
            order.shuffle(&mut rng_from_seed(self.seed));
        }
        let test = order.split_off(n_train);
        Ok((order, test))
    }
}

/// Chronological: the first `floor(n * train_fraction)` windows train. Shuffled:
/// the same cut applied after a seeded permutation.
pub fn split(series: &WindowedSeries, spec: &SplitSpec) -> Result<(WindowedSeries, WindowedSeries)> {
    let (train, test) = spec.indices(series.len())?;
    Ok((series.subset(&train), series.subset(&test)))
}
