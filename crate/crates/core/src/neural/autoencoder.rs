use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer, GradModel, NeuralError};
use crate::rng::{derive_seed, rng_from_seed};

/// One hidden bottleneck: `z = act(W_e x + b_e)`, `x̂ = W_d z + b_d`.
/// Reconstruction loss per sample is the mean squared error over the `d`
/// input dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderParams {
    pub encoder: DenseLayer,
    pub decoder: DenseLayer,
}

impl AutoencoderParams {
    pub fn init(input: usize, bottleneck: usize, activation: Activation, seed: u64) -> Result<Self, NeuralError> {
        if bottleneck == 0 || bottleneck > input {
            return Err(super::invalid("bottleneck", format!("must lie in [1, {input}], got {bottleneck}")));
        }
        let mut rng = rng_from_seed(derive_seed(seed, "autoencoder-init"));
        let encoder = DenseLayer::init(input, bottleneck, activation, &mut rng);
        let decoder = DenseLayer::init(bottleneck, input, Activation::Identity, &mut rng);
        Ok(Self { encoder, decoder })
    }

    /// Default bottleneck width `ceil(d / 2)`.
    pub fn default_bottleneck(input: usize) -> usize {
        input.div_ceil(2).max(1)
    }

    pub fn input_size(&self) -> usize {
        self.encoder.input_size()
    }

    pub fn bottleneck(&self) -> usize {
        self.encoder.output_size()
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let (d, h) = (self.input_size(), self.bottleneck());
        if h == 0 || h > d {
            return Err(NeuralError::Shape(format!("bottleneck {h} must lie in [1, {d}]")));
        }
        if self.decoder.input_size() != h || self.decoder.output_size() != d {
            return Err(NeuralError::Shape("decoder does not mirror the encoder".into()));
        }
        if self.decoder.activation != Activation::Identity {
            return Err(NeuralError::Shape("decoder output must be linear".into()));
        }
        for l in [&self.encoder, &self.decoder] {
            if l.b.shape() != [l.output_size()] {
                return Err(NeuralError::Shape("bias length differs from layer width".into()));
            }
            super::check_finite_tensor("autoencoder weight", &l.w)?;
            super::check_finite_tensor("autoencoder bias", &l.b)?;
        }
        Ok(())
    }

    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        Ok(self.decoder.forward(&encode(self, x)?))
    }
}

pub fn encode(params: &AutoencoderParams, x: &[f64]) -> Result<Vec<f64>, NeuralError> {
    if x.len() != params.input_size() {
        return Err(NeuralError::Shape(format!(
            "input has {} values, encoder expects {}",
            x.len(),
            params.input_size()
        )));
    }
    Ok(params.encoder.forward(x))
}

impl GradModel for AutoencoderParams {
    type Sample = Vec<f64>;
    const LOSS_TO_MSE: f64 = 1.0;

    fn tensors(&self) -> Vec<&[f64]> {
        vec![self.encoder.w.data(), self.encoder.b.data(), self.decoder.w.data(), self.decoder.b.data()]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.encoder.w.data_mut(),
            self.encoder.b.data_mut(),
            self.decoder.w.data_mut(),
            self.decoder.b.data_mut(),
        ]
    }

    fn loss(&self, x: &Vec<f64>) -> Result<f64, NeuralError> {
        let r = self.reconstruct(x)?;
        Ok(r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64)
    }

    fn accumulate_grad(&self, x: &Vec<f64>, grad: &mut Self) -> Result<f64, NeuralError> {
        let z = encode(self, x)?;
        let r = self.decoder.forward(&z);
        let n = x.len() as f64;
        let d_out: Vec<f64> = r.iter().zip(x).map(|(a, b)| 2.0 * (a - b) / n).collect();
        let dz = self.decoder.backward(&z, &r, &d_out, &mut grad.decoder);
        self.encoder.backward(x, &z, &dz, &mut grad.encoder);
        Ok(r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn zero_encoder_gives_zero_code() {
        let mut p = AutoencoderParams::init(4, 2, Activation::Tanh, 0).unwrap();
        p.encoder.w.data_mut().fill(0.0);
        p.encoder.b.data_mut().fill(0.0);
        assert_eq!(encode(&p, &[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_encoder_passes_input_through() {
        let mut p = AutoencoderParams::init(3, 3, Activation::Identity, 0).unwrap();
        let mut eye = Tensor::zeros_matrix(3, 3);
        for k in 0..3 {
            eye.data_mut()[k * 3 + k] = 1.0;
        }
        p.encoder.w = eye;
        p.encoder.b.data_mut().fill(0.0);
        let x = [0.25, -1.5, 7.0];
        assert_eq!(encode(&p, &x).unwrap(), x.to_vec());
    }

    #[test]
    fn bottleneck_bounds() {
        assert!(AutoencoderParams::init(3, 0, Activation::Tanh, 0).is_err());
        assert!(AutoencoderParams::init(3, 4, Activation::Tanh, 0).is_err());
        assert_eq!(AutoencoderParams::default_bottleneck(5), 3);
        let p = AutoencoderParams::init(5, 3, Activation::Tanh, 9).unwrap();
        p.validate().unwrap();
        assert!(matches!(encode(&p, &[0.0; 4]), Err(NeuralError::Shape(_))));
    }
}
