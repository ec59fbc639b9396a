//! Regression error metrics on paired actual/predicted vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {actual} actual vs {predicted} predicted values")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("prediction pair is empty")]
    Empty,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("actual value at index {0} is zero; MAPE is undefined under the error policy")]
    ZeroTarget(usize),
}

/// Validated `(actual, predicted)` vectors of equal, non-zero length.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPair {
    actual: Vec<f64>,
    predicted: Vec<f64>,
}

impl PredictionPair {
    pub fn new(actual: Vec<f64>, predicted: Vec<f64>) -> Result<Self, MetricsError> {
        if actual.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch { actual: actual.len(), predicted: predicted.len() });
        }
        if actual.is_empty() {
            return Err(MetricsError::Empty);
        }
        if let Some(i) = actual.iter().zip(&predicted).position(|(a, p)| !a.is_finite() || !p.is_finite()) {
            return Err(MetricsError::NonFinite(i));
        }
        Ok(Self { actual, predicted })
    }

    pub fn actual(&self) -> &[f64] {
        &self.actual
    }

    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }

    pub fn len(&self) -> usize {
        self.actual.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.actual.iter().zip(&self.predicted).map(|(y, p)| y - p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPolicy {
    Error,
    #[default]
    SkipZeroTargets,
}

pub fn mse(pair: &PredictionPair) -> f64 {
    pair.residuals().map(|r| r * r).sum::<f64>() / pair.len() as f64
}

pub fn rmse(pair: &PredictionPair) -> f64 {
    mse(pair).sqrt()
}

pub fn mae(pair: &PredictionPair) -> f64 {
    pair.residuals().map(f64::abs).sum::<f64>() / pair.len() as f64
}

/// MAPE in percent plus the number of zero targets that were skipped.
/// `value` is `None` when no term was admitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapeOutcome {
    pub value: Option<f64>,
    pub skipped: usize,
}

pub fn mape(pair: &PredictionPair, policy: ZeroPolicy) -> Result<MapeOutcome, MetricsError> {
    let mut sum = 0.0;
    let mut admitted = 0usize;
    let mut skipped = 0usize;
    for (i, (y, p)) in pair.actual.iter().zip(&pair.predicted).enumerate() {
        if *y == 0.0 {
            match policy {
                ZeroPolicy::Error => return Err(MetricsError::ZeroTarget(i)),
                ZeroPolicy::SkipZeroTargets => {
                    skipped += 1;
                    continue;
                }
            }
        }
        sum += ((y - p) / y).abs();
        admitted += 1;
    }
    let value = (admitted > 0).then(|| 100.0 * sum / admitted as f64);
    Ok(MapeOutcome { value, skipped })
}

/// The four-metric row used in every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    /// Percent; absent when every target was zero.
    pub mape: Option<f64>,
    #[serde(default)]
    pub mape_skipped: usize,
}

impl MetricsBundle {
    pub fn zero() -> Self {
        Self { mse: 0.0, rmse: 0.0, mae: 0.0, mape: Some(0.0), mape_skipped: 0 }
    }

    /// `rmse = √mse` (relative 1e-12) and `0 ≤ mae ≤ rmse`.
    pub fn is_consistent(&self) -> bool {
        let root_ok = (self.rmse * self.rmse - self.mse).abs() <= 1e-12 * self.mse.max(f64::MIN_POSITIVE);
        root_ok && self.mae >= 0.0 && self.mae <= self.rmse * (1.0 + 1e-12)
    }

    /// Metrics as `[mse, rmse, mae, mape]`.
    pub fn as_array(&self) -> [Option<f64>; 4] {
        [Some(self.mse), Some(self.rmse), Some(self.mae), self.mape]
    }
}

pub fn bundle(pair: &PredictionPair, policy: ZeroPolicy) -> Result<MetricsBundle, MetricsError> {
    let m = mse(pair);
    let mp = mape(pair, policy)?;
    Ok(MetricsBundle { mse: m, rmse: m.sqrt(), mae: mae(pair), mape: mp.value, mape_skipped: mp.skipped })
}

/// Rounds half away from zero to `decimals` places, as used in report display.
pub fn round_to(value: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (value * scale).round() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(y: &[f64], p: &[f64]) -> PredictionPair {
        PredictionPair::new(y.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn perfect_prediction_is_zero() {
        let p = pair(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert_eq!(bundle(&p, ZeroPolicy::Error).unwrap(), MetricsBundle::zero());
    }

    #[test]
    fn hand_values() {
        let p = pair(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]);
        assert!((mse(&p) - 2.0 / 3.0).abs() < 1e-15);
        assert!((mae(&p) - 2.0 / 3.0).abs() < 1e-15);
        let b = bundle(&p, ZeroPolicy::SkipZeroTargets).unwrap();
        assert!((b.rmse - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((b.mape.unwrap() - (100.0 + 0.0 + 100.0 / 3.0) / 3.0).abs() < 1e-12);
        assert_eq!(mse(&pair(&[0.0], &[3.0])), 9.0);
        assert_eq!(mae(&pair(&[1.0, -1.0], &[-1.0, 1.0])), 2.0);
    }

    #[test]
    fn rmse_of_reference_mse_values() {
        let p = pair(&[0.0], &[1.77f64.sqrt()]);
        assert_eq!(round_to(rmse(&p), 2), 1.33);
        let p = pair(&[0.0], &[0.54f64.sqrt()]);
        assert_eq!(round_to(rmse(&p), 2), 0.73);
    }

    #[test]
    fn mape_cases() {
        let p = pair(&[2.0, 4.0], &[1.0, 5.0]);
        assert!((mape(&p, ZeroPolicy::Error).unwrap().value.unwrap() - 37.5).abs() < 1e-12);
        let z = pair(&[0.0, 2.0], &[1.0, 2.0]);
        let out = mape(&z, ZeroPolicy::SkipZeroTargets).unwrap();
        assert_eq!(out, MapeOutcome { value: Some(0.0), skipped: 1 });
        assert_eq!(mape(&z, ZeroPolicy::Error), Err(MetricsError::ZeroTarget(0)));
        let all_zero = pair(&[0.0, 0.0], &[1.0, 2.0]);
        assert_eq!(mape(&all_zero, ZeroPolicy::SkipZeroTargets).unwrap().value, None);
    }

    #[test]
    fn invalid_pairs() {
        assert!(matches!(PredictionPair::new(vec![1.0], vec![]), Err(MetricsError::LengthMismatch { .. })));
        assert_eq!(PredictionPair::new(vec![], vec![]), Err(MetricsError::Empty));
        assert_eq!(PredictionPair::new(vec![1.0, f64::NAN], vec![1.0, 1.0]), Err(MetricsError::NonFinite(1)));
    }

    fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..40).prop_flat_map(|n| {
            (prop::collection::vec(0.5f64..5.0, n), prop::collection::vec(-2.0f64..6.0, n))
        })
    }

    proptest! {
        #[test]
        fn bundle_invariants((y, p) in pairs()) {
            let b = bundle(&PredictionPair::new(y, p).unwrap(), ZeroPolicy::SkipZeroTargets).unwrap();
            prop_assert!(b.is_consistent());
        }

        #[test]
        fn joint_permutation_invariance((y, p) in pairs(), rot in 0usize..40) {
            let b = bundle(&PredictionPair::new(y.clone(), p.clone()).unwrap(), ZeroPolicy::Error).unwrap();
            let k = rot % y.len();
            let (mut y2, mut p2) = (y.clone(), p.clone());
            y2.rotate_left(k);
            p2.rotate_left(k);
            let b2 = bundle(&PredictionPair::new(y2, p2).unwrap(), ZeroPolicy::Error).unwrap();
            prop_assert!((b.mse - b2.mse).abs() <= 1e-12 * b.mse.max(1.0));
            prop_assert!((b.mae - b2.mae).abs() <= 1e-12 * b.mae.max(1.0));
            prop_assert!((b.mape.unwrap() - b2.mape.unwrap()).abs() <= 1e-10 * b.mape.unwrap().max(1.0));
        }

        #[test]
        fn scale_and_shift((y, p) in pairs(), c in 0.1f64..10.0, shift in -3.0f64..3.0) {
            let base = bundle(&PredictionPair::new(y.clone(), p.clone()).unwrap(), ZeroPolicy::Error).unwrap();
            let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
            let ps: Vec<f64> = p.iter().map(|v| v * c).collect();
            let scaled = bundle(&PredictionPair::new(ys, ps).unwrap(), ZeroPolicy::Error).unwrap();
            prop_assert!((scaled.mse - c * c * base.mse).abs() <= 1e-9 * scaled.mse.max(1e-12));
            prop_assert!((scaled.rmse - c * base.rmse).abs() <= 1e-9 * scaled.rmse.max(1e-12));
            prop_assert!((scaled.mae - c * base.mae).abs() <= 1e-9 * scaled.mae.max(1e-12));
            prop_assert!((scaled.mape.unwrap() - base.mape.unwrap()).abs() <= 1e-9 * base.mape.unwrap().max(1.0));
            let yt: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let pt: Vec<f64> = p.iter().map(|v| v + shift).collect();
            let moved = bundle(&PredictionPair::new(yt, pt).unwrap(), ZeroPolicy::SkipZeroTargets).unwrap();
            prop_assert!((moved.mse - base.mse).abs() <= 1e-9 * base.mse.max(1.0));
            prop_assert!((moved.mae - base.mae).abs() <= 1e-9 * base.mae.max(1.0));
        }
    }
}
