use serde::{Deserialize, Serialize};

use super::{mean, sample_std, DatasetError, RawTable, Result, CYCLE_NUMBER};

/// Per-feature z-scoring parameters. `stds` use the sample (n - 1) divisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl StandardizationParams {
    pub fn len(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature_names.is_empty()
    }

    pub fn index_of(&self, feature: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|f| f == feature)
            .ok_or_else(|| DatasetError::UnknownFeature(feature.to_string()))
    }

    #[inline]
    pub fn forward(&self, idx: usize, x: f64) -> f64 {
        (x - self.means[idx]) / self.stds[idx]
    }

    #[inline]
    pub fn inverse(&self, idx: usize, z: f64) -> f64 {
        z * self.stds[idx] + self.means[idx]
    }
}

/// Fits parameters from named columns of raw values.
pub fn fit_standardizer_columns(names: &[String], columns: &[Vec<f64>]) -> Result<StandardizationParams> {
    assert_eq!(names.len(), columns.len(), "one column per name");
    let mut means = Vec::with_capacity(names.len());
    let mut stds = Vec::with_capacity(names.len());
    for (name, col) in names.iter().zip(columns) {
        if col.iter().any(|v| !v.is_finite()) {
            return Err(DatasetError::InvalidParameter(format!(
                "feature `{name}` has non-finite values; impute first"
            )));
        }
        let sd = sample_std(col);
        if !(sd > 0.0) {
            return Err(DatasetError::ZeroVariance(name.clone()));
        }
        means.push(mean(col));
        stds.push(sd);
    }
    Ok(StandardizationParams { feature_names: names.to_vec(), means, stds })
}

pub fn fit_standardizer(table: &RawTable, features: &[String]) -> Result<StandardizationParams> {
    let mut cols = Vec::with_capacity(features.len());
    for f in features {
        if f == CYCLE_NUMBER {
            return Err(DatasetError::KeyColumn(f.clone()));
        }
        cols.push(table.column(f)?);
    }
    fit_standardizer_columns(features, &cols)
}

/// Replaces every parameterized column `x` with `(x - μ) / σ`.
pub fn apply_standardizer(table: &RawTable, params: &StandardizationParams) -> Result<RawTable> {
    let mut idx = Vec::with_capacity(params.len());
    for f in &params.feature_names {
        if f == CYCLE_NUMBER {
            return Err(DatasetError::KeyColumn(f.clone()));
        }
        idx.push(table.column_index(f)?);
    }
    let mut records = table.records().to_vec();
    for r in &mut records {
        for (p, &c) in idx.iter().enumerate() {
            let z = params.forward(p, r.get(c));
            r.set(c, z);
        }
    }
    // An affine map with positive slope keeps time_s ordering, so no re-sort is needed.
    Ok(RawTable::from_parts_unchecked(table.columns().to_vec(), records, table.missing_mask().to_vec()))
}

pub fn invert_standardizer(value: f64, feature: &str, params: &StandardizationParams) -> Result<f64> {
    let idx = params.index_of(feature)?;
    Ok(params.inverse(idx, value))
}
