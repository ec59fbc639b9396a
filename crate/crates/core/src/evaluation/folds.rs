use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{invalid, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Indices outside fold `j`, ascending.
    pub fn train_indices(&self, j: usize) -> Vec<usize> {
        let mut held = vec![false; self.n];
        for &i in &self.folds[j] {
            held[i] = true;
        }
        (0..self.n).filter(|&i| !held[i]).collect()
    }

    /// Indices of fold `j`, ascending.
    pub fn test_indices(&self, j: usize) -> Vec<usize> {
        let mut t = self.folds[j].clone();
        t.sort_unstable();
        t
    }
}

/// Seeded shuffle of `0..n`, then contiguous slices; the first `n % k` folds
/// get one extra index.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(invalid("k", format!("needs at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(invalid("k", format!("{k} folds requested for {n} samples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for j in 0..k {
        let size = base + usize::from(j < extra);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(FoldPlan { k, n, seed, folds })
}
