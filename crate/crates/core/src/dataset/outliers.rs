use super::{mean, sample_std, DatasetError, RawTable, Result};

/// Per-row maximum absolute z-score over the value columns (everything except
/// the two key columns). Constant columns contribute nothing.
pub fn column_z_scores(table: &RawTable) -> Vec<f64> {
    let width = table.columns().len();
    let mut worst = vec![0.0_f64; table.len()];
    for c in 2..width {
        let col: Vec<f64> = table.records().iter().map(|r| r.get(c)).collect();
        let sd = sample_std(&col);
        if sd == 0.0 || !sd.is_finite() {
            continue;
        }
        let mu = mean(&col);
        for (w, v) in worst.iter_mut().zip(&col) {
            *w = w.max(((v - mu) / sd).abs());
        }
    }
    worst
}

/// Drops rows where any value column's z-score exceeds `z_threshold` in
/// magnitude. Statistics come from the input table itself.
pub fn remove_outliers(table: &RawTable, z_threshold: f64) -> Result<(RawTable, usize)> {
    if !(z_threshold > 0.0) {
        return Err(DatasetError::InvalidParameter(format!(
            "z_threshold must be positive, got {z_threshold}"
        )));
    }
    if table.missing_count() > 0 || table.records().iter().any(|r| (0..table.columns().len()).any(|c| !r.get(c).is_finite())) {
        return Err(DatasetError::InvalidParameter("outlier removal needs an imputed table".into()));
    }
    let z = column_z_scores(table);
    let keep: Vec<bool> = z.iter().map(|&v| v <= z_threshold).collect();
    let remaining = keep.iter().filter(|&&k| k).count();
    if remaining < 2 {
        return Err(DatasetError::OverAggressiveThreshold { threshold: z_threshold, remaining });
    }
    Ok((table.retain_rows(&keep), table.len() - remaining))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CycleRecord;
    use proptest::prelude::*;

    fn spiky_table() -> RawTable {
        let mut recs: Vec<CycleRecord> =
            (0..200).map(|i| CycleRecord::new(1, i as f64, 3.7, 1.0, 25.0)).collect();
        recs[100].voltage_v = 13.7;
        RawTable::from_records(recs).unwrap()
    }

    #[test]
    fn single_spike_removed() {
        let t = spiky_table();
        // Hand z-score of the spike: mean = 3.7 + 10/200, deviations 0.05 (x199) and 9.95.
        let mu = 3.7 + 10.0 / 200.0;
        let ss = 199.0 * (3.7_f64 - mu).powi(2) + (13.7_f64 - mu).powi(2);
        let z = (13.7 - mu) / (ss / 199.0).sqrt();
        assert!(z > 3.0);
        let (out, removed) = remove_outliers(&t, 3.0).unwrap();
        assert_eq!(removed, 1);
        assert_eq!(out.len(), 199);
        assert!(out.records().iter().all(|r| r.voltage_v == 3.7));
    }

    #[test]
    fn huge_threshold_removes_nothing() {
        let (out, removed) = remove_outliers(&spiky_table(), 1e9).unwrap();
        assert_eq!(removed, 0);
        assert_eq!(out.len(), 200);
    }

    #[test]
    fn non_positive_threshold_rejected() {
        assert!(matches!(remove_outliers(&spiky_table(), 0.0), Err(DatasetError::InvalidParameter(_))));
    }

    #[test]
    fn over_aggressive_threshold() {
        let recs = (0..3).map(|i| CycleRecord::new(1, i as f64, 3.0 + i as f64, 1.0, 25.0)).collect();
        let t = RawTable::from_records(recs).unwrap();
        assert!(matches!(
            remove_outliers(&t, 0.5),
            Err(DatasetError::OverAggressiveThreshold { remaining: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn idempotent_above_max_z(vs in prop::collection::vec(3.0f64..4.2, 3..60), extra in 0.0f64..5.0) {
            let recs = vs.iter().enumerate().map(|(i, &v)| CycleRecord::new(1, i as f64, v, 1.0, 25.0)).collect();
            let t = RawTable::from_records(recs).unwrap();
            let max_z = column_z_scores(&t).into_iter().fold(0.0, f64::max);
            let thr = max_z + extra + 1e-9;
            let (once, removed) = remove_outliers(&t, thr).unwrap();
            prop_assert_eq!(removed, 0);
            let (twice, _) = remove_outliers(&once, thr).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
