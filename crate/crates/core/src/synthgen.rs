//! Equivalent-circuit charge-cycle generator.
//!
//! Each step advances state of charge by coulomb counting, derives the
//! internal resistance from cycle age and temperature, reads the terminal
//! voltage as `OCV(SOC) + I·R` plus optional gaussian noise, and integrates a
//! lumped thermal balance. Cycles start at SOC 0.05 and ambient temperature
//! and stop when the cell is full or a step cap is hit.

use rand::seq::index;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CycleRecord, RawTable};
use crate::rng::rng_from_seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid `{key}`: {message}")]
    InvalidParameter { key: String, message: String },
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
}

fn invalid(key: &str, message: impl Into<String>) -> SynthError {
    SynthError::InvalidParameter { key: key.to_string(), message: message.into() }
}

pub const START_SOC: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryModelParams {
    pub capacity_ah: f64,
    /// Internal resistance at the ambient temperature on cycle 1.
    pub r0_ohm: f64,
    /// Fractional resistance change per °C above ambient.
    pub r_temp_coeff: f64,
    /// Fractional resistance growth per elapsed cycle.
    pub r_aging_coeff: f64,
    /// Open-circuit voltage polynomial in SOC, lowest order first.
    pub ocv_coeffs: Vec<f64>,
    pub ambient_c: f64,
    /// °C per joule of dissipated heat.
    pub thermal_mass: f64,
    /// Newtonian cooling rate per second.
    pub cooling_rate: f64,
    pub noise_std_v: f64,
    pub seed: u64,
}

impl Default for BatteryModelParams {
    fn default() -> Self {
        Self {
            capacity_ah: 2.0,
            r0_ohm: 0.05,
            r_temp_coeff: -0.004,
            r_aging_coeff: 0.005,
            ocv_coeffs: vec![3.0, 1.2, -0.8, 0.8],
            ambient_c: 25.0,
            thermal_mass: 0.05,
            cooling_rate: 0.002,
            noise_std_v: 0.002,
            seed: 0,
        }
    }
}

impl BatteryModelParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let positive = [("capacity_ah", self.capacity_ah), ("r0_ohm", self.r0_ohm), ("thermal_mass", self.thermal_mass)];
        for (key, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(key, format!("must be positive, got {v}")));
            }
        }
        let non_negative =
            [("r_aging_coeff", self.r_aging_coeff), ("cooling_rate", self.cooling_rate), ("noise_std_v", self.noise_std_v)];
        for (key, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(key, format!("must be non-negative, got {v}")));
            }
        }
        for (key, v) in [("r_temp_coeff", self.r_temp_coeff), ("ambient_c", self.ambient_c)] {
            if !v.is_finite() {
                return Err(invalid(key, "must be finite"));
            }
        }
        if self.ocv_coeffs.is_empty() || self.ocv_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("ocv_coeffs", "need at least one finite coefficient"));
        }
        Ok(())
    }

    /// Open-circuit voltage by Horner evaluation.
    pub fn ocv(&self, soc: f64) -> f64 {
        self.ocv_coeffs.iter().rev().fold(0.0, |acc, c| acc * soc + c)
    }

    /// Internal resistance on `cycle` (1-based) at temperature `temp_c`.
    pub fn resistance(&self, cycle: u32, temp_c: f64) -> f64 {
        self.r0_ohm
            * (1.0 + self.r_aging_coeff * f64::from(cycle - 1))
            * (1.0 + self.r_temp_coeff * (temp_c - self.ambient_c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurrentProfile {
    Constant { amps: f64 },
    /// Step `k` of every cycle draws `amps[k]`; the last entry is held.
    PerStep { amps: Vec<f64> },
    /// Cycle `c` (1-based) charges at `amps[(c - 1) % len]`.
    PerCycle { amps: Vec<f64> },
}

impl Default for CurrentProfile {
    fn default() -> Self {
        CurrentProfile::PerCycle { amps: vec![2.0, 1.5, 2.5, 1.0, 3.0] }
    }
}

impl CurrentProfile {
    pub fn current(&self, cycle: u32, step: usize) -> f64 {
        match self {
            CurrentProfile::Constant { amps } => *amps,
            CurrentProfile::PerStep { amps } => amps[step.min(amps.len() - 1)],
            CurrentProfile::PerCycle { amps } => amps[(cycle as usize - 1) % amps.len()],
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let values = match self {
            CurrentProfile::Constant { amps } => std::slice::from_ref(amps),
            CurrentProfile::PerStep { amps } | CurrentProfile::PerCycle { amps } => amps.as_slice(),
        };
        if values.is_empty() {
            return Err(invalid("current_profile", "needs at least one current value"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("current_profile", "currents must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub params: BatteryModelParams,
    pub n_cycles: u32,
    pub dt_s: f64,
    pub current_profile: CurrentProfile,
    /// Maximum steps per cycle before it is cut off and flagged as truncated.
    pub step_cap: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            params: BatteryModelParams::default(),
            n_cycles: 30,
            dt_s: 60.0,
            current_profile: CurrentProfile::default(),
            step_cap: 10_000,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        self.params.validate()?;
        if self.n_cycles == 0 {
            return Err(invalid("n_cycles", "must be at least 1"));
        }
        if !(self.dt_s > 0.0) || !self.dt_s.is_finite() {
            return Err(invalid("dt_s", format!("must be positive, got {}", self.dt_s)));
        }
        if self.step_cap == 0 {
            return Err(invalid("step_cap", "must be at least 1"));
        }
        self.current_profile.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub table: RawTable,
    /// Cycles that hit `step_cap` before reaching full charge.
    pub truncated_cycles: Vec<u32>,
}

/// Runs `cfg.n_cycles` charge cycles. Noise for cycle `c` is drawn from a
/// stream seeded with `seed ^ c`, so cycles are independent of each other.
pub fn simulate_charge_cycles(cfg: &SimulationConfig) -> Result<SimulationOutput, SynthError> {
    cfg.validate()?;
    let p = &cfg.params;
    let noise = if p.noise_std_v > 0.0 {
        Some(Normal::new(0.0, p.noise_std_v).map_err(|e| invalid("noise_std_v", e.to_string()))?)
    } else {
        None
    };
    let mut records = Vec::new();
    let mut truncated = Vec::new();
    for cycle in 1..=cfg.n_cycles {
        let mut rng = rng_from_seed(p.seed ^ u64::from(cycle));
        let mut soc = START_SOC;
        let mut temp = p.ambient_c;
        let mut full = false;
        for step in 0..cfg.step_cap {
            let amps = cfg.current_profile.current(cycle, step);
            soc = (soc + amps * cfg.dt_s / (3600.0 * p.capacity_ah)).clamp(0.0, 1.0);
            let r = p.resistance(cycle, temp);
            let mut volts = p.ocv(soc) + amps * r;
            if let Some(n) = &noise {
                volts += n.sample(&mut rng);
            }
            records.push(CycleRecord::new(cycle, (step + 1) as f64 * cfg.dt_s, volts, amps, temp));
            temp += p.thermal_mass * amps * amps * r * cfg.dt_s - p.cooling_rate * (temp - p.ambient_c) * cfg.dt_s;
            if soc >= 1.0 {
                full = true;
                break;
            }
        }
        if !full {
            truncated.push(cycle);
        }
    }
    Ok(SimulationOutput { table: RawTable::from_records(records)?, truncated_cycles: truncated })
}

/// Masks `floor(fraction * eligible)` value cells chosen uniformly at random.
/// Key columns (`cycle_number`, `time_s`) are never touched.
pub fn inject_missing(table: &RawTable, fraction: f64, seed: u64) -> Result<RawTable, SynthError> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(invalid("fraction", format!("must lie in [0, 1), got {fraction}")));
    }
    if table.is_empty() {
        return Err(SynthError::Dataset(crate::dataset::DatasetError::EmptyInput));
    }
    let width = table.columns().len();
    let value_cols = width - 2;
    let eligible = table.len() * value_cols;
    let count = (fraction * eligible as f64).floor() as usize;
    let mut records = table.records().to_vec();
    let mut mask = table.missing_mask().to_vec();
    let mut rng = rng_from_seed(seed);
    for cell in index::sample(&mut rng, eligible, count) {
        let (row, col) = (cell / value_cols, 2 + cell % value_cols);
        mask[row][col] = true;
        records[row].set(col, f64::NAN);
    }
    Ok(RawTable::with_columns(table.columns().to_vec(), records, Some(mask))?)
}
