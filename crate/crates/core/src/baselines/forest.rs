use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tree::Grower;
use super::{invalid, BaselineError, FittedBaseline, FlatDataset, RegressionTree, TreeConfig};
use crate::rng::{derive_indexed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub bootstrap: bool,
    /// Features drawn per split; `None` means `ceil(d / 3)`.
    pub feature_subsample: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 100, bootstrap: true, feature_subsample: None, max_depth: None, min_leaf: 1 }
    }
}

impl ForestConfig {
    pub fn subsample_for(&self, d: usize) -> usize {
        self.feature_subsample.unwrap_or_else(|| d.div_ceil(3)).max(1)
    }
}

/// Bagged CART trees with per-split feature subsampling. Tree `t` draws from
/// its own stream seeded by `derive_indexed(seed, t)`.
pub fn forest_fit(data: &FlatDataset, cfg: &ForestConfig, seed: u64) -> Result<FittedBaseline, BaselineError> {
    if cfg.n_trees == 0 {
        return Err(invalid("n_trees", "must be at least 1"));
    }
    if cfg.min_leaf == 0 {
        return Err(invalid("min_leaf", "must be at least 1"));
    }
    if cfg.max_depth == Some(0) {
        return Err(invalid("max_depth", "must be at least 1"));
    }
    let d = data.d();
    let m = cfg.subsample_for(d);
    if m > d {
        return Err(invalid("feature_subsample", format!("must lie in [1, {d}], got {m}")));
    }
    let tree_cfg = TreeConfig { max_depth: cfg.max_depth, min_leaf: cfg.min_leaf };
    let trees = (0..cfg.n_trees)
        .map(|t| {
            let mut rng = rng_from_seed(derive_indexed(seed, t as u64));
            let rows: Vec<usize> = if cfg.bootstrap {
                (0..data.n()).map(|_| rng.random_range(0..data.n())).collect()
            } else {
                (0..data.n()).collect()
            };
            let all: Vec<usize> = (0..d).collect();
            let pick = || {
                if m == d {
                    all.clone()
                } else {
                    let mut f = index::sample(&mut rng, d, m).into_vec();
                    f.sort_unstable();
                    f
                }
            };
            let mut g = Grower { data, cfg: tree_cfg, pick_features: pick, nodes: Vec::new() };
            g.grow(rows, 0);
            RegressionTree { n_features: d, nodes: g.nodes }
        })
        .collect();
    Ok(FittedBaseline::Forest { trees, config: *cfg, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{predict_all, tree_fit};

    fn data() -> FlatDataset {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 9) as f64, (i * 5 % 7) as f64 * 0.3, i as f64 * 0.1]).collect();
        let y = rows.iter().map(|r| r[0] * r[1] - r[2]).collect();
        FlatDataset::new(rows, y).unwrap()
    }

    fn probes() -> Vec<Vec<f64>> {
        (0..25).map(|i| vec![i as f64 * 0.37, (i % 4) as f64 * 0.5, 4.0 - i as f64 * 0.2]).collect()
    }

    #[test]
    fn single_full_tree_equals_cart() {
        let cfg = ForestConfig { n_trees: 1, bootstrap: false, feature_subsample: Some(3), max_depth: Some(4), min_leaf: 2 };
        let forest = forest_fit(&data(), &cfg, 11).unwrap();
        let tree = tree_fit(&data(), &TreeConfig { max_depth: Some(4), min_leaf: 2 });
        assert_eq!(predict_all(&forest, &probes()).unwrap(), predict_all(&tree, &probes()).unwrap());
    }

    #[test]
    fn constant_target_everywhere() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, -(i as f64)]).collect();
        let d = FlatDataset::new(rows, vec![4.25; 12]).unwrap();
        let m = forest_fit(&d, &ForestConfig { n_trees: 7, ..ForestConfig::default() }, 3).unwrap();
        assert!(predict_all(&m, &probes().iter().map(|p| p[..2].to_vec()).collect::<Vec<_>>())
            .unwrap()
            .iter()
            .all(|&v| v == 4.25));
    }

    #[test]
    fn seeded_determinism() {
        let cfg = ForestConfig { n_trees: 10, ..ForestConfig::default() };
        let a = predict_all(&forest_fit(&data(), &cfg, 77).unwrap(), &probes()).unwrap();
        let b = predict_all(&forest_fit(&data(), &cfg, 77).unwrap(), &probes()).unwrap();
        assert_eq!(a, b);
        let c = predict_all(&forest_fit(&data(), &cfg, 78).unwrap(), &probes()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn default_subsample_is_a_third() {
        assert_eq!(ForestConfig::default().subsample_for(64), 22);
        assert_eq!(ForestConfig::default().subsample_for(3), 1);
        assert!(forest_fit(&data(), &ForestConfig { feature_subsample: Some(4), ..ForestConfig::default() }, 0).is_err());
    }
}
