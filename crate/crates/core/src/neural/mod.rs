//! Gradient-trained models: the LSTM forecaster, a feedforward regressor and
//! the feature-fusion autoencoder, plus the shared SGD trainer and a
//! finite-difference gradient checker.

mod autoencoder;
mod gradcheck;
mod lstm;
mod mlp;
mod train;

pub use autoencoder::{encode, AutoencoderParams};
pub use gradcheck::{gradient_agrees, gradient_check, gradient_pairs, relative_error};
pub use lstm::{lstm_backward, lstm_forward, GateParams, LstmCache, LstmParams, SeqSample};
pub use mlp::{DenseLayer, Labeled, MlpParams};
pub use train::{train, train_with_callback, TrainConfig, TrainTrace};

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("cache does not match the window: {0}")]
    Consistency(String),
    #[error("invalid parameter `{key}`: {message}")]
    InvalidParameter { key: String, message: String },
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },
}

pub(crate) fn invalid(key: &str, message: impl Into<String>) -> NeuralError {
    NeuralError::InvalidParameter { key: key.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Sigmoid,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output `a`.
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// A model whose per-sample loss can be differentiated with respect to every
/// parameter. Parameters are exposed as an ordered list of flat slices so the
/// trainer, clipping and gradient checker can treat all models alike.
pub trait GradModel: Clone {
    type Sample;

    /// Factor that turns the per-sample objective into a squared error.
    const LOSS_TO_MSE: f64;

    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn loss(&self, sample: &Self::Sample) -> Result<f64, NeuralError>;

    /// Adds the gradient of the per-sample loss into `grad` and returns the loss.
    fn accumulate_grad(&self, sample: &Self::Sample, grad: &mut Self) -> Result<f64, NeuralError>;

    fn zeroed(&self) -> Self {
        let mut z = self.clone();
        z.fill_zero();
        z
    }

    fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn flat_params(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Fills `t` with uniform draws from `[-1/√fan_in, 1/√fan_in]`.
pub(crate) fn init_uniform(t: &mut [f64], fan_in: usize, rng: &mut Rng) {
    let s = 1.0 / (fan_in as f64).sqrt();
    for v in t.iter_mut() {
        *v = rng.random_range(-s..=s);
    }
}

pub(crate) fn check_finite_tensor(name: &str, t: &Tensor) -> Result<(), NeuralError> {
    if t.all_finite() {
        Ok(())
    } else {
        Err(NeuralError::Shape(format!("{name} has non-finite entries")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activation_derivatives_match_differences() {
        for act in [Activation::Tanh, Activation::Sigmoid, Activation::Identity] {
            for &z in &[-1.3, -0.2, 0.4, 2.0] {
                let h = 1e-6;
                let fd = (act.apply(z + h) - act.apply(z - h)) / (2.0 * h);
                assert!((fd - act.derivative_from_output(act.apply(z))).abs() < 1e-8);
            }
        }
    }
}
