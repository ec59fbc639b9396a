use serde::{Deserialize, Serialize};

use super::{invalid, EliminationConfig, Result};
use crate::baselines::FlatDataset;

/// Sample Pearson correlation; `None` when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    pub target_corr: f64,
    pub retained: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationReport {
    /// Retained names in their original order.
    pub retained: Vec<String>,
    /// Every input feature, strongest target correlation first.
    pub ranking: Vec<FeatureScore>,
}

/// Drops features whose |r| with the target is below `target_corr_min`, then
/// walks the survivors from strongest to weakest and drops any whose |r| with
/// an already kept feature exceeds `pair_corr_max`. The strongest feature is
/// kept if nothing else survives.
pub fn feature_eliminate(data: &FlatDataset, names: &[String], cfg: &EliminationConfig) -> Result<EliminationReport> {
    cfg.validate()?;
    let d = data.d();
    if names.len() != d {
        return Err(invalid("features", format!("{} names for {d} columns", names.len())));
    }
    if d < 2 {
        return Err(invalid("features", "elimination needs at least two features"));
    }
    let cols: Vec<Vec<f64>> = (0..d).map(|j| data.column(j)).collect();
    let mut scores: Vec<FeatureScore> = Vec::with_capacity(d);
    let mut order: Vec<(usize, f64)> = Vec::with_capacity(d);
    for (j, col) in cols.iter().enumerate() {
        let r = pearson(col, data.y());
        let note = match r {
            None if col.iter().all(|v| *v == col[0]) => Some("constant feature, correlation taken as 0".to_string()),
            None => Some("constant target, correlation taken as 0".to_string()),
            Some(_) => None,
        };
        let r = r.unwrap_or(0.0);
        scores.push(FeatureScore { name: names[j].clone(), target_corr: r, retained: false, note });
        order.push((j, r.abs()));
    }
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut kept: Vec<usize> = Vec::new();
    for &(j, strength) in &order {
        if scores[j].note.is_some() {
            continue;
        }
        if strength < cfg.target_corr_min {
            scores[j].note = Some(format!("|r| {strength:.4} below {}", cfg.target_corr_min));
            continue;
        }
        let clash = kept.iter().find_map(|&k| {
            let r = pearson(&cols[j], &cols[k]).unwrap_or(0.0).abs();
            (r > cfg.pair_corr_max).then_some((k, r))
        });
        match clash {
            Some((k, r)) => scores[j].note = Some(format!("|r| {r:.4} with {}", names[k])),
            None => kept.push(j),
        }
    }
    if kept.is_empty() {
        let j = order[0].0;
        kept.push(j);
        scores[j].note = Some("kept as the strongest remaining feature".to_string());
    }
    for &j in &kept {
        scores[j].retained = true;
    }
    kept.sort_unstable();
    let retained = kept.iter().map(|&j| names[j].clone()).collect();
    let ranking = order.iter().map(|&(j, _)| scores[j].clone()).collect();
    Ok(EliminationReport { retained, ranking })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    fn cfg(min: f64, max: f64) -> EliminationConfig {
        EliminationConfig { target_corr_min: min, pair_corr_max: max }
    }

    #[test]
    fn pearson_oracle_values() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0], &[0.0, 1.0]), None);
        // x = [1, 2, 3, 4], y = [1, 3, 2, 4]: sxy = 4, sxx = syy = 5.
        assert!((pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn target_copy_is_kept_and_noise_dropped() {
        let mut rng = crate::rng::rng_from_seed(8);
        let y: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.01).sin()).collect();
        let rows: Vec<Vec<f64>> = y.iter().map(|&t| vec![t, rng.random_range(-1.0..1.0)]).collect();
        let rep = feature_eliminate(&FlatDataset::new(rows, y).unwrap(), &names(2), &cfg(0.1, 1.0)).unwrap();
        assert_eq!(rep.retained, vec!["f0".to_string()]);
        assert!((rep.ranking[0].target_corr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_of_two_duplicates_survives() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, i as f64, (i * 7 % 5) as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| i as f64 + (i % 3) as f64).collect();
        let rep = feature_eliminate(&FlatDataset::new(rows, y).unwrap(), &names(3), &cfg(0.0, 0.95)).unwrap();
        assert_eq!(rep.retained.iter().filter(|n| *n == "f0" || *n == "f1").count(), 1);
    }

    #[test]
    fn constant_feature_noted_not_fatal() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![2.0, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let rep = feature_eliminate(&FlatDataset::new(rows, y).unwrap(), &names(2), &cfg(0.5, 1.0)).unwrap();
        assert_eq!(rep.retained, vec!["f1".to_string()]);
        let c = rep.ranking.iter().find(|s| s.name == "f0").unwrap();
        assert_eq!(c.target_corr, 0.0);
        assert!(c.note.as_deref().unwrap().contains("constant"));
    }

    #[test]
    fn strongest_kept_when_all_fail() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![(i % 2) as f64, (i % 3) as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let rep = feature_eliminate(&FlatDataset::new(rows, y).unwrap(), &names(2), &cfg(1.0, 1.0)).unwrap();
        assert_eq!(rep.retained.len(), 1);
    }

    proptest! {
        #[test]
        fn retained_is_nonempty_subset(seed in any::<u64>(), d in 2usize..6, min in 0.0f64..1.0, max in 0.05f64..1.0) {
            let mut rng = crate::rng::rng_from_seed(seed);
            let rows: Vec<Vec<f64>> = (0..25).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let y: Vec<f64> = rows.iter().map(|r| r[0] + rng.random_range(-0.5..0.5)).collect();
            let n = names(d);
            let rep = feature_eliminate(&FlatDataset::new(rows, y).unwrap(), &n, &cfg(min, max)).unwrap();
            prop_assert!(!rep.retained.is_empty());
            prop_assert!(rep.retained.iter().all(|r| n.contains(r)));
            prop_assert_eq!(rep.ranking.len(), d);
        }
    }
}
