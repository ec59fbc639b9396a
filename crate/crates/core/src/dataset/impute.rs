use serde::{Deserialize, Serialize};

use super::{DatasetError, RawTable, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ImputeStrategy {
    /// Carry the previous value in the same cycle forward; gaps at the start
    /// of a cycle take the column mean over observed cells.
    #[default]
    ForwardFillThenMean,
    DropRow,
}

pub fn impute_missing(table: &RawTable, strategy: ImputeStrategy) -> Result<RawTable> {
    if table.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let width = table.columns().len();
    for c in 0..width {
        if table.missing_mask().iter().all(|m| m[c]) {
            return Err(DatasetError::UnimputableColumn(table.columns()[c].clone()));
        }
    }
    match strategy {
        ImputeStrategy::DropRow => {
            let keep: Vec<bool> = table.missing_mask().iter().map(|m| !m.iter().any(|&x| x)).collect();
            let out = table.retain_rows(&keep);
            if out.is_empty() {
                return Err(DatasetError::EmptyInput);
            }
            Ok(out)
        }
        ImputeStrategy::ForwardFillThenMean => {
            let mut out = table.clone();
            let ranges = table.cycle_ranges();
            for c in 0..width {
                let observed: Vec<f64> = table
                    .records()
                    .iter()
                    .zip(table.missing_mask())
                    .filter(|(_, m)| !m[c])
                    .map(|(r, _)| r.get(c))
                    .collect();
                if observed.len() == table.len() {
                    continue;
                }
                let col_mean = super::mean(&observed);
                for (_, range) in &ranges {
                    let mut last: Option<f64> = None;
                    for i in range.clone() {
                        if table.missing_mask()[i][c] {
                            let fill = last.unwrap_or(col_mean);
                            out.records_mut()[i].set(c, fill);
                            last = Some(fill);
                        } else {
                            last = Some(table.records()[i].get(c));
                        }
                    }
                }
            }
            for m in out.mask_mut().iter_mut() {
                m.iter_mut().for_each(|x| *x = false);
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::read_csv;

    const HEADER: &str = "cycle_number,time_s,voltage_V,current_A,temperature_C\n";

    #[test]
    fn forward_fill_within_cycle() {
        let src = format!("{HEADER}1,0,3.0,1,25\n1,1,3.1,1,25\n1,2,,1,25\n1,3,3.3,1,25\n");
        let t = impute_missing(&read_csv(src.as_bytes()).unwrap(), ImputeStrategy::ForwardFillThenMean).unwrap();
        assert_eq!(t.records()[2].voltage_v, 3.1);
        assert_eq!(t.missing_count(), 0);
    }

    #[test]
    fn leading_gap_takes_column_mean() {
        // observed temperatures {2.0, 4.0} -> mean 3.0
        let src = format!("{HEADER}1,0,3.0,1,\n1,1,3.1,1,2.0\n2,0,3.2,1,4.0\n");
        let t = impute_missing(&read_csv(src.as_bytes()).unwrap(), ImputeStrategy::ForwardFillThenMean).unwrap();
        assert_eq!(t.records()[0].temperature_c, 3.0);
    }

    #[test]
    fn forward_fill_does_not_cross_cycles() {
        let src = format!("{HEADER}1,0,3.0,1,10\n2,0,3.1,1,\n2,1,3.1,1,40\n");
        let t = impute_missing(&read_csv(src.as_bytes()).unwrap(), ImputeStrategy::ForwardFillThenMean).unwrap();
        assert_eq!(t.records()[1].temperature_c, 25.0);
    }

    #[test]
    fn drop_row_removes_masked_rows() {
        let src = format!("{HEADER}1,0,3.0,1,25\n1,1,3.1,,25\n1,2,3.2,1,25\n1,3,3.3,1,25\n1,4,3.4,1,25\n");
        let t = impute_missing(&read_csv(src.as_bytes()).unwrap(), ImputeStrategy::DropRow).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.missing_count(), 0);
    }

    #[test]
    fn fully_masked_column_is_an_error() {
        let src = format!("{HEADER}1,0,3.0,1,\n1,1,3.1,1,\n");
        let err = impute_missing(&read_csv(src.as_bytes()).unwrap(), ImputeStrategy::ForwardFillThenMean).unwrap_err();
        assert_eq!(err, DatasetError::UnimputableColumn("temperature_C".into()));
    }
}
