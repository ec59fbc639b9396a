use super::{DatasetError, RawTable, Result, TARGET_COLUMN};

/// A fixed-length input sequence and the voltage `horizon` steps after its end.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// `steps[t][f]`: value of feature `f` at timestep `t`.
    pub steps: Vec<Vec<f64>>,
    pub target: f64,
    pub cycle_number: u32,
    /// Row index of the target record in the source table.
    pub target_row: usize,
}

impl Window {
    /// Timestep-major flattening used by the non-sequential models.
    pub fn flatten(&self) -> Vec<f64> {
        self.steps.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSeries {
    pub windows: Vec<Window>,
    pub window_length: usize,
    pub horizon: usize,
    pub feature_names: Vec<String>,
}

impl WindowedSeries {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.windows.iter().map(|w| w.target).collect()
    }

    /// A series with the same metadata holding the windows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            windows: indices.iter().map(|&i| self.windows[i].clone()).collect(),
            window_length: self.window_length,
            horizon: self.horizon,
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| DatasetError::UnknownFeature(name.to_string()))
    }

    /// Keeps only the named features, in the given order.
    pub fn select_features(&self, names: &[String]) -> Result<Self> {
        let idx: Vec<usize> = names.iter().map(|n| self.feature_index(n)).collect::<Result<_>>()?;
        let windows = self
            .windows
            .iter()
            .map(|w| Window {
                steps: w.steps.iter().map(|s| idx.iter().map(|&i| s[i]).collect()).collect(),
                ..w.clone()
            })
            .collect();
        Ok(Self {
            windows,
            window_length: self.window_length,
            horizon: self.horizon,
            feature_names: names.to_vec(),
        })
    }
}

/// Stride-1 windows inside each cycle. A cycle with `n` rows yields
/// `max(0, n - length - horizon + 1)` windows; none cross a cycle boundary.
pub fn make_windows(table: &RawTable, length: usize, horizon: usize, features: &[String]) -> Result<WindowedSeries> {
    if length == 0 || horizon == 0 {
        return Err(DatasetError::InvalidParameter("window length and horizon must be positive".into()));
    }
    if features.is_empty() {
        return Err(DatasetError::InvalidParameter("at least one feature is required".into()));
    }
    let cols: Vec<usize> = features.iter().map(|f| table.column_index(f)).collect::<Result<_>>()?;
    let recs = table.records();
    let mut windows = Vec::new();
    for (cycle, range) in table.cycle_ranges() {
        let n = range.len();
        if n < length + horizon {
            continue;
        }
        for start in range.start..=(range.end - length - horizon) {
            let steps = (start..start + length)
                .map(|r| cols.iter().map(|&c| recs[r].get(c)).collect())
                .collect();
            let target_row = start + length - 1 + horizon;
            windows.push(Window { steps, target: recs[target_row].get(TARGET_COLUMN), cycle_number: cycle, target_row });
        }
    }
    if windows.is_empty() {
        return Err(DatasetError::EmptySeries { needed: length + horizon });
    }
    Ok(WindowedSeries { windows, window_length: length, horizon, feature_names: features.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CycleRecord;
    use proptest::prelude::*;

    fn table(cycle_lengths: &[usize]) -> RawTable {
        let mut recs = Vec::new();
        for (c, &n) in cycle_lengths.iter().enumerate() {
            for i in 0..n {
                recs.push(CycleRecord::new(c as u32 + 1, i as f64, 3.0 + 0.01 * i as f64 + c as f64, 1.0, 25.0));
            }
        }
        RawTable::from_records(recs).unwrap()
    }

    fn feats() -> Vec<String> {
        vec!["voltage_V".to_string(), "current_A".to_string()]
    }

    #[test]
    fn five_rows_length_three_gives_two() {
        let t = table(&[5]);
        let s = make_windows(&t, 3, 1, &feats()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.windows[0].steps.len(), 3);
        assert_eq!(s.windows[0].target, t.records()[3].voltage_v);
        assert_eq!(s.windows[1].target_row, 4);
    }

    #[test]
    fn windows_stay_inside_cycles() {
        let s = make_windows(&table(&[4, 4]), 3, 1, &feats()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.windows[0].cycle_number, 1);
        assert_eq!(s.windows[1].cycle_number, 2);
        assert_eq!(s.windows[1].steps[0][0], 4.0);
    }

    #[test]
    fn too_long_window_is_empty_series() {
        assert!(matches!(make_windows(&table(&[4]), 5, 1, &feats()), Err(DatasetError::EmptySeries { .. })));
    }

    #[test]
    fn flatten_is_timestep_major() {
        let s = make_windows(&table(&[3]), 2, 1, &feats()).unwrap();
        assert_eq!(s.windows[0].flatten(), vec![3.0, 1.0, 3.0 + 0.01, 1.0]);
    }

    proptest! {
        #[test]
        fn count_matches_enumeration(lens in prop::collection::vec(1usize..20, 1..6), l in 1usize..6, h in 1usize..4) {
            let t = table(&lens);
            // Brute force: every (cycle, start) whose target row stays in the cycle.
            let mut expected = 0;
            for &n in &lens {
                for start in 0..n {
                    if start + l - 1 + h < n {
                        expected += 1;
                    }
                }
            }
            match make_windows(&t, l, h, &feats()) {
                Ok(s) => {
                    prop_assert_eq!(s.len(), expected);
                    for w in &s.windows {
                        let rows = w.target_row - h + 1 - l..=w.target_row;
                        prop_assert!(rows.clone().all(|r| t.records()[r].cycle_number == w.cycle_number));
                    }
                }
                Err(_) => prop_assert_eq!(expected, 0),
            }
        }
    }
}
