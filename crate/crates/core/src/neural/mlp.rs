use serde::{Deserialize, Serialize};

use super::{check_finite_tensor, init_uniform, Activation, GradModel, NeuralError};
use crate::rng::{derive_seed, rng_from_seed};
use crate::tensor::Tensor;

/// A feature vector with a scalar target.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Fully connected layer: `out = act(W x + b)` with `W` of shape `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub w: Tensor,
    pub b: Tensor,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Self { w: Tensor::zeros_matrix(output, input), b: Tensor::zeros_vector(output), activation }
    }

    pub fn init(input: usize, output: usize, activation: Activation, rng: &mut crate::rng::Rng) -> Self {
        let mut l = Self::zeros(input, output, activation);
        init_uniform(l.w.data_mut(), input, rng);
        init_uniform(l.b.data_mut(), input, rng);
        l
    }

    pub fn input_size(&self) -> usize {
        self.w.cols()
    }

    pub fn output_size(&self) -> usize {
        self.w.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.b.data().to_vec();
        self.w.matvec_acc(x, &mut out);
        for v in &mut out {
            *v = self.activation.apply(*v);
        }
        out
    }

    /// Given `d_out = ∂L/∂out`, accumulates parameter gradients and returns `∂L/∂x`.
    pub(crate) fn backward(&self, x: &[f64], out: &[f64], d_out: &[f64], grad: &mut DenseLayer) -> Vec<f64> {
        let delta: Vec<f64> =
            d_out.iter().zip(out).map(|(d, a)| d * self.activation.derivative_from_output(*a)).collect();
        grad.w.outer_acc(&delta, x);
        for (b, d) in grad.b.data_mut().iter_mut().zip(&delta) {
            *b += d;
        }
        let mut dx = vec![0.0; x.len()];
        self.w.matvec_t_acc(&delta, &mut dx);
        dx
    }
}

/// Feedforward regressor: hidden layers with their own activations, then a
/// single linear output unit. Loss per sample is `½ (prediction − y)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
}

impl MlpParams {
    pub fn init(input: usize, hidden: &[usize], activation: Activation, seed: u64) -> Self {
        let mut rng = rng_from_seed(derive_seed(seed, "mlp-init"));
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan = input;
        for &h in hidden {
            layers.push(DenseLayer::init(fan, h, activation, &mut rng));
            fan = h;
        }
        layers.push(DenseLayer::init(fan, 1, Activation::Identity, &mut rng));
        Self { layers }
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].input_size()
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let Some(last) = self.layers.last() else {
            return Err(NeuralError::Shape("MLP has no layers".into()));
        };
        if last.output_size() != 1 || last.activation != Activation::Identity {
            return Err(NeuralError::Shape("MLP must end in one linear output unit".into()));
        }
        for (k, pair) in self.layers.windows(2).enumerate() {
            if pair[0].output_size() != pair[1].input_size() {
                return Err(NeuralError::Shape(format!("layer {k} output does not feed layer {}", k + 1)));
            }
        }
        for l in &self.layers {
            if l.b.shape() != [l.output_size()] {
                return Err(NeuralError::Shape("bias length differs from layer width".into()));
            }
            check_finite_tensor("mlp weight", &l.w)?;
            check_finite_tensor("mlp bias", &l.b)?;
        }
        Ok(())
    }

    fn activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, NeuralError> {
        if x.len() != self.input_size() {
            return Err(NeuralError::Shape(format!("input has {} features, model expects {}", x.len(), self.input_size())));
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for l in &self.layers {
            let next = l.forward(acts.last().expect("seeded with input"));
            acts.push(next);
        }
        Ok(acts)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, NeuralError> {
        Ok(self.activations(x)?.last().expect("output layer")[0])
    }
}

impl GradModel for MlpParams {
    type Sample = Labeled;
    const LOSS_TO_MSE: f64 = 2.0;

    fn tensors(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| [l.w.data(), l.b.data()]).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.w.data_mut());
            out.push(l.b.data_mut());
        }
        out
    }

    fn loss(&self, s: &Labeled) -> Result<f64, NeuralError> {
        let e = self.predict(&s.x)? - s.y;
        Ok(0.5 * e * e)
    }

    fn accumulate_grad(&self, s: &Labeled, grad: &mut Self) -> Result<f64, NeuralError> {
        let acts = self.activations(&s.x)?;
        let e = acts.last().expect("output")[0] - s.y;
        let mut d = vec![e];
        for k in (0..self.layers.len()).rev() {
            d = self.layers[k].backward(&acts[k], &acts[k + 1], &d, &mut grad.layers[k]);
        }
        Ok(0.5 * e * e)
    }
}
