use serde::{Deserialize, Serialize};

use super::{invalid, BaselineError, FittedBaseline, FlatDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 5 }
    }
}

pub fn knn_fit(data: &FlatDataset, cfg: &KnnConfig) -> Result<FittedBaseline, BaselineError> {
    if cfg.k == 0 || cfg.k > data.n() {
        return Err(invalid("k", format!("must lie in [1, {}], got {}", data.n(), cfg.k)));
    }
    Ok(FittedBaseline::Knn { x: data.x().clone(), y: data.y().to_vec(), config: *cfg })
}

/// Mean target of the `k` nearest training rows by Euclidean distance; equal
/// distances go to the lower row index.
pub fn knn_predict(model: &FittedBaseline, query: &[f64]) -> Result<f64, BaselineError> {
    let FittedBaseline::Knn { x, y, config } = model else {
        return Err(invalid("model", "not a kNN model"));
    };
    if query.len() != x.cols() {
        return Err(BaselineError::Shape { expected: x.cols(), got: query.len() });
    }
    let mut dist: Vec<(f64, usize)> = (0..x.rows())
        .map(|i| {
            let d2: f64 = x.row(i).iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2.sqrt(), i)
        })
        .collect();
    let k = config.k;
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, cmp);
        dist.truncate(k);
    }
    dist.sort_unstable_by(cmp);
    Ok(dist.iter().map(|&(_, i)| y[i]).sum::<f64>() / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> FlatDataset {
        FlatDataset::new(vec![vec![0.0], vec![1.0], vec![10.0]], vec![0.0, 1.0, 10.0]).unwrap()
    }

    #[test]
    fn exact_match_with_k1() {
        let m = knn_fit(&data(), &KnnConfig { k: 1 }).unwrap();
        assert_eq!(m.predict(&[10.0]).unwrap(), 10.0);
    }

    #[test]
    fn k_equals_n_gives_global_mean() {
        let m = knn_fit(&data(), &KnnConfig { k: 3 }).unwrap();
        assert_eq!(m.predict(&[-50.0]).unwrap(), 11.0 / 3.0);
        assert_eq!(m.predict(&[500.0]).unwrap(), 11.0 / 3.0);
    }

    #[test]
    fn two_nearest() {
        let m = knn_fit(&data(), &KnnConfig { k: 2 }).unwrap();
        assert_eq!(m.predict(&[0.4]).unwrap(), 0.5);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let d = FlatDataset::new(vec![vec![-1.0], vec![1.0], vec![1.0]], vec![5.0, 7.0, 9.0]).unwrap();
        let m = knn_fit(&d, &KnnConfig { k: 1 }).unwrap();
        assert_eq!(m.predict(&[0.0]).unwrap(), 5.0);
        assert_eq!(m.predict(&[1.0]).unwrap(), 7.0);
    }

    #[test]
    fn k_larger_than_n_rejected() {
        assert!(matches!(knn_fit(&data(), &KnnConfig { k: 4 }), Err(BaselineError::InvalidParameter { .. })));
    }
}
