//! Battery charging-voltage forecasting toolkit.
//!
//! The crate is organised as a pipeline:
//!
//! * [`dataset`] ingests cycling telemetry, repairs gaps, standardizes and windows it.
//! * [`synthgen`] produces equivalent-circuit charge cycles in the same schema.
//! * [`baselines`] and [`neural`] hold the regressors (linear, SGD, kNN, tree,
//!   forest, MLP, LSTM) and the feature-fusion autoencoder.
//! * [`metrics`] scores predictions with MSE, RMSE, MAE and MAPE.
//! * [`evaluation`] runs k-fold cross-validation, model comparison, feature
//!   elimination and the base / stage-1 / stage-2 tuning ladder.
//! * [`cli`] wires everything to a JSON-configured command line.

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod evaluation;
pub mod metrics;
pub mod neural;
pub mod rng;
pub mod synthgen;
pub mod tensor;

pub use dataset::{CycleRecord, RawTable, StandardizationParams, WindowedSeries};
pub use metrics::{MetricsBundle, PredictionPair};
