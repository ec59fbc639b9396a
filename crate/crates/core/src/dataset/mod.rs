//! Telemetry ingestion and preprocessing.
//!
//! A [`RawTable`] holds per-step cycling records in `(cycle_number, time_s)`
//! order together with a mask of cells that were absent in the source. The
//! operations in this module are pure: each returns a new table or series.

mod impute;
mod io;
mod outliers;
mod split;
mod standardize;
mod windows;

pub use impute::{impute_missing, ImputeStrategy};
pub use io::{load_csv, read_csv, table_to_csv_string, write_csv};
pub use outliers::{column_z_scores, remove_outliers};
pub use split::{split, SplitMode, SplitSpec};
pub use standardize::{
    apply_standardizer, fit_standardizer, fit_standardizer_columns, invert_standardizer,
    StandardizationParams,
};
pub use windows::{make_windows, Window, WindowedSeries};

use thiserror::Error;

pub const CYCLE_NUMBER: &str = "cycle_number";
pub const TIME_S: &str = "time_s";
pub const VOLTAGE_V: &str = "voltage_V";
pub const CURRENT_A: &str = "current_A";
pub const TEMPERATURE_C: &str = "temperature_C";

/// The five columns every input file must carry, in canonical order.
pub const REQUIRED_COLUMNS: [&str; 5] = [CYCLE_NUMBER, TIME_S, VOLTAGE_V, CURRENT_A, TEMPERATURE_C];

/// Index of the prediction target column.
pub const TARGET_COLUMN: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("input is empty")]
    EmptyInput,
    #[error("schema error: missing required column `{0}`")]
    MissingColumn(String),
    #[error("schema error: duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse { row: usize, column: String, message: String },
    #[error("cycle {cycle}: time_s {time} is not strictly increasing")]
    NonIncreasingTime { cycle: u32, time: f64 },
    #[error("column `{0}` has no observed values and cannot be imputed")]
    UnimputableColumn(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("outlier threshold {threshold} would leave {remaining} rows (need at least 2)")]
    OverAggressiveThreshold { threshold: f64, remaining: usize },
    #[error("feature `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("key column `{0}` cannot be standardized")]
    KeyColumn(String),
    #[error("no cycle has at least {needed} records; window series would be empty")]
    EmptySeries { needed: usize },
    #[error("degenerate split: {train} train / {test} test windows")]
    DegenerateSplit { train: usize, test: usize },
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// One telemetry row.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle_number: u32,
    pub time_s: f64,
    pub voltage_v: f64,
    pub current_a: f64,
    pub temperature_c: f64,
    /// Values of any additional CSV columns, in header order.
    pub extra: Vec<f64>,
}

impl CycleRecord {
    pub fn new(cycle_number: u32, time_s: f64, voltage_v: f64, current_a: f64, temperature_c: f64) -> Self {
        Self { cycle_number, time_s, voltage_v, current_a, temperature_c, extra: Vec::new() }
    }

    /// Value of column `col` in the table's column order.
    pub fn get(&self, col: usize) -> f64 {
        match col {
            0 => f64::from(self.cycle_number),
            1 => self.time_s,
            2 => self.voltage_v,
            3 => self.current_a,
            4 => self.temperature_c,
            c => self.extra[c - 5],
        }
    }

    /// Overwrite a value column. Panics on the key columns.
    pub fn set(&mut self, col: usize, value: f64) {
        match col {
            0 => panic!("cycle_number is a key column"),
            1 => self.time_s = value,
            2 => self.voltage_v = value,
            3 => self.current_a = value,
            4 => self.temperature_c = value,
            c => self.extra[c - 5] = value,
        }
    }
}

/// Ordered telemetry plus a per-cell mask of originally missing values.
///
/// Masked cells hold `NaN` until imputed.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    columns: Vec<String>,
    records: Vec<CycleRecord>,
    missing_mask: Vec<Vec<bool>>,
}

impl RawTable {
    /// Builds a table from complete records with the five required columns.
    pub fn from_records(records: Vec<CycleRecord>) -> Result<Self> {
        let columns = REQUIRED_COLUMNS.iter().map(|s| s.to_string()).collect();
        Self::with_columns(columns, records, None)
    }

    /// Builds a table with explicit column names (the five required ones first,
    /// then extras) and an optional mask. Records are sorted into
    /// `(cycle_number, time_s)` order.
    pub fn with_columns(
        columns: Vec<String>,
        records: Vec<CycleRecord>,
        mask: Option<Vec<Vec<bool>>>,
    ) -> Result<Self> {
        for (i, name) in REQUIRED_COLUMNS.iter().enumerate() {
            if columns.get(i).map(String::as_str) != Some(*name) {
                return Err(DatasetError::MissingColumn(name.to_string()));
            }
        }
        let n_extra = columns.len() - REQUIRED_COLUMNS.len();
        if let Some(bad) = records.iter().find(|r| r.extra.len() != n_extra) {
            return Err(DatasetError::InvalidParameter(format!(
                "record in cycle {} has {} extra values, expected {n_extra}",
                bad.cycle_number,
                bad.extra.len()
            )));
        }
        if let Some(r) = records.iter().find(|r| r.cycle_number < 1) {
            return Err(DatasetError::InvalidParameter(format!(
                "cycle_number must be >= 1, got {}",
                r.cycle_number
            )));
        }
        let width = columns.len();
        let mut mask = mask.unwrap_or_else(|| vec![vec![false; width]; records.len()]);
        if mask.len() != records.len() || mask.iter().any(|m| m.len() != width) {
            return Err(DatasetError::InvalidParameter("mask dimensions do not match records".into()));
        }
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (&records[a], &records[b]);
            ra.cycle_number
                .cmp(&rb.cycle_number)
                .then(ra.time_s.total_cmp(&rb.time_s))
        });
        let mut sorted = Vec::with_capacity(records.len());
        let mut sorted_mask = Vec::with_capacity(records.len());
        let mut slots: Vec<Option<CycleRecord>> = records.into_iter().map(Some).collect();
        for i in order {
            sorted.push(slots[i].take().expect("each index visited once"));
            sorted_mask.push(std::mem::take(&mut mask[i]));
        }
        for pair in sorted.windows(2) {
            if pair[0].cycle_number == pair[1].cycle_number && pair[1].time_s <= pair[0].time_s {
                return Err(DatasetError::NonIncreasingTime {
                    cycle: pair[1].cycle_number,
                    time: pair[1].time_s,
                });
            }
        }
        Ok(Self { columns, records: sorted, missing_mask: sorted_mask })
    }

    pub(crate) fn from_parts_unchecked(
        columns: Vec<String>,
        records: Vec<CycleRecord>,
        missing_mask: Vec<Vec<bool>>,
    ) -> Self {
        Self { columns, records, missing_mask }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn records(&self) -> &[CycleRecord] {
        &self.records
    }

    pub fn missing_mask(&self) -> &[Vec<bool>] {
        &self.missing_mask
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| DatasetError::UnknownFeature(name.to_string()))
    }

    /// All values of one column, including `NaN` for masked cells.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.column_index(name)?;
        Ok(self.records.iter().map(|r| r.get(idx)).collect())
    }

    pub fn missing_count(&self) -> usize {
        self.missing_mask.iter().flatten().filter(|&&m| m).count()
    }

    /// Distinct cycle numbers in order.
    pub fn cycles(&self) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for r in &self.records {
            if out.last() != Some(&r.cycle_number) {
                out.push(r.cycle_number);
            }
        }
        out
    }

    /// Row ranges `[start, end)` of each cycle.
    pub fn cycle_ranges(&self) -> Vec<(u32, std::ops::Range<usize>)> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.records.len() {
            if i == self.records.len() || self.records[i].cycle_number != self.records[start].cycle_number {
                out.push((self.records[start].cycle_number, start..i));
                start = i;
            }
        }
        out
    }

    pub(crate) fn records_mut(&mut self) -> &mut Vec<CycleRecord> {
        &mut self.records
    }

    pub(crate) fn mask_mut(&mut self) -> &mut Vec<Vec<bool>> {
        &mut self.missing_mask
    }

    /// Keeps only the rows for which `keep` is true.
    pub(crate) fn retain_rows(&self, keep: &[bool]) -> Self {
        let mut records = Vec::new();
        let mut mask = Vec::new();
        for ((r, m), &k) in self.records.iter().zip(&self.missing_mask).zip(keep) {
            if k {
                records.push(r.clone());
                mask.push(m.clone());
            }
        }
        Self { columns: self.columns.clone(), records, missing_mask: mask }
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (divisor n - 1); zero for fewer than two values.
pub(crate) fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}
