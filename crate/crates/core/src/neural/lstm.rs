//! Single-layer LSTM with a forget gate and a scalar linear readout of the
//! last hidden state.
//!
//! Per step, with `x` the input and `h`, `c` the previous hidden and cell:
//!
//! ```text
//! i = σ(W_i x + U_i h + b_i)    f = σ(W_f x + U_f h + b_f)
//! o = σ(W_o x + U_o h + b_o)    g = tanh(W_c x + U_c h + b_c)
//! c' = f ⊙ c + i ⊙ g            h' = o ⊙ tanh(c')
//! ```
//!
//! The prediction is `w_y · h_L + b_y`; the per-sample loss is
//! `½ (prediction − target)²`.

use serde::{Deserialize, Serialize};

use super::{check_finite_tensor, init_uniform, sigmoid, GradModel, NeuralError};
use crate::rng::{derive_seed, rng_from_seed};
use crate::tensor::Tensor;

/// An input sequence (`steps[t]` has one value per feature) and its target.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqSample {
    pub steps: Vec<Vec<f64>>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// Input weights, `hidden x input`.
    pub w: Tensor,
    /// Recurrent weights, `hidden x hidden`.
    pub u: Tensor,
    pub b: Tensor,
}

impl GateParams {
    fn zeros(hidden: usize, input: usize) -> Self {
        Self { w: Tensor::zeros_matrix(hidden, input), u: Tensor::zeros_matrix(hidden, hidden), b: Tensor::zeros_vector(hidden) }
    }

    #[inline]
    fn pre_activation(&self, x: &[f64], h: &[f64], out: &mut [f64]) {
        out.copy_from_slice(self.b.data());
        self.w.matvec_acc(x, out);
        self.u.matvec_acc(h, out);
    }

    #[inline]
    fn accumulate(&mut self, delta: &[f64], x: &[f64], h_prev: &[f64]) {
        self.w.outer_acc(delta, x);
        self.u.outer_acc(delta, h_prev);
        for (b, d) in self.b.data_mut().iter_mut().zip(delta) {
            *b += d;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input_size: usize,
    pub hidden_size: usize,
    pub input_gate: GateParams,
    pub forget_gate: GateParams,
    pub output_gate: GateParams,
    pub candidate: GateParams,
    pub w_y: Tensor,
    pub b_y: f64,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            input_size,
            hidden_size,
            input_gate: GateParams::zeros(hidden_size, input_size),
            forget_gate: GateParams::zeros(hidden_size, input_size),
            output_gate: GateParams::zeros(hidden_size, input_size),
            candidate: GateParams::zeros(hidden_size, input_size),
            w_y: Tensor::zeros_vector(hidden_size),
            b_y: 0.0,
        }
    }

    /// Uniform initialization in `±1/√fan_in`; gates have fan-in
    /// `input + hidden`, the readout `hidden`.
    pub fn init(input_size: usize, hidden_size: usize, seed: u64) -> Self {
        let mut p = Self::zeros(input_size, hidden_size);
        let mut rng = rng_from_seed(derive_seed(seed, "lstm-init"));
        let gate_fan = input_size + hidden_size;
        for gate in [&mut p.input_gate, &mut p.forget_gate, &mut p.output_gate, &mut p.candidate] {
            init_uniform(gate.w.data_mut(), gate_fan, &mut rng);
            init_uniform(gate.u.data_mut(), gate_fan, &mut rng);
            init_uniform(gate.b.data_mut(), gate_fan, &mut rng);
        }
        init_uniform(p.w_y.data_mut(), hidden_size, &mut rng);
        init_uniform(std::slice::from_mut(&mut p.b_y), hidden_size, &mut rng);
        p
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let (h, d) = (self.hidden_size, self.input_size);
        if h == 0 || d == 0 {
            return Err(NeuralError::Shape("hidden and input sizes must be positive".into()));
        }
        for (name, g) in self.named_gates() {
            if g.w.shape() != [h, d] || g.u.shape() != [h, h] || g.b.shape() != [h] {
                return Err(NeuralError::Shape(format!("{name} gate shapes do not match ({h}, {d})")));
            }
            check_finite_tensor(name, &g.w)?;
            check_finite_tensor(name, &g.u)?;
            check_finite_tensor(name, &g.b)?;
        }
        if self.w_y.shape() != [h] || !self.b_y.is_finite() {
            return Err(NeuralError::Shape("readout shape or value invalid".into()));
        }
        check_finite_tensor("w_y", &self.w_y)
    }

    fn named_gates(&self) -> [(&'static str, &GateParams); 4] {
        [
            ("input", &self.input_gate),
            ("forget", &self.forget_gate),
            ("output", &self.output_gate),
            ("candidate", &self.candidate),
        ]
    }

    pub fn predict(&self, steps: &[Vec<f64>]) -> Result<f64, NeuralError> {
        lstm_forward(self, steps).map(|(p, _)| p)
    }
}

/// Activations kept from the forward pass. Index `t` of `h`/`c` is the state
/// after `t` steps, so `h[0] = c[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCache {
    pub i: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub o: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub tanh_c: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub prediction: f64,
}

impl LstmCache {
    pub fn len(&self) -> usize {
        self.i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty()
    }
}

pub fn lstm_forward(params: &LstmParams, steps: &[Vec<f64>]) -> Result<(f64, LstmCache), NeuralError> {
    let (hs, d) = (params.hidden_size, params.input_size);
    if steps.is_empty() {
        return Err(NeuralError::Shape("window has no timesteps".into()));
    }
    if let Some((t, s)) = steps.iter().enumerate().find(|(_, s)| s.len() != d) {
        return Err(NeuralError::Shape(format!("timestep {t} has {} features, model expects {d}", s.len())));
    }
    let l = steps.len();
    let mut cache = LstmCache {
        i: Vec::with_capacity(l),
        f: Vec::with_capacity(l),
        o: Vec::with_capacity(l),
        g: Vec::with_capacity(l),
        c: Vec::with_capacity(l + 1),
        tanh_c: Vec::with_capacity(l),
        h: Vec::with_capacity(l + 1),
        prediction: 0.0,
    };
    cache.c.push(vec![0.0; hs]);
    cache.h.push(vec![0.0; hs]);
    for x in steps {
        let h_prev = cache.h.last().expect("seeded with h0");
        let c_prev = cache.c.last().expect("seeded with c0");
        let mut i = vec![0.0; hs];
        let mut f = vec![0.0; hs];
        let mut o = vec![0.0; hs];
        let mut g = vec![0.0; hs];
        params.input_gate.pre_activation(x, h_prev, &mut i);
        params.forget_gate.pre_activation(x, h_prev, &mut f);
        params.output_gate.pre_activation(x, h_prev, &mut o);
        params.candidate.pre_activation(x, h_prev, &mut g);
        let mut c = vec![0.0; hs];
        let mut tc = vec![0.0; hs];
        let mut h = vec![0.0; hs];
        for k in 0..hs {
            i[k] = sigmoid(i[k]);
            f[k] = sigmoid(f[k]);
            o[k] = sigmoid(o[k]);
            g[k] = g[k].tanh();
            c[k] = f[k] * c_prev[k] + i[k] * g[k];
            tc[k] = c[k].tanh();
            h[k] = o[k] * tc[k];
        }
        cache.i.push(i);
        cache.f.push(f);
        cache.o.push(o);
        cache.g.push(g);
        cache.c.push(c);
        cache.tanh_c.push(tc);
        cache.h.push(h);
    }
    let h_last = cache.h.last().expect("at least one step");
    let pred = params.b_y + params.w_y.data().iter().zip(h_last).map(|(w, h)| w * h).sum::<f64>();
    cache.prediction = pred;
    Ok((pred, cache))
}

/// Backpropagation through time for `½ (prediction − target)²`, added into `grad`.
pub(crate) fn lstm_backward_into(
    params: &LstmParams,
    steps: &[Vec<f64>],
    target: f64,
    cache: &LstmCache,
    grad: &mut LstmParams,
) -> Result<(), NeuralError> {
    let hs = params.hidden_size;
    if cache.len() != steps.len() || cache.h.len() != steps.len() + 1 {
        return Err(NeuralError::Consistency(format!(
            "cache holds {} steps, window has {}",
            cache.len(),
            steps.len()
        )));
    }
    if cache.h[0].len() != hs || grad.hidden_size != hs || grad.input_size != params.input_size {
        return Err(NeuralError::Consistency("hidden size differs between cache, parameters and gradient".into()));
    }
    let err = cache.prediction - target;
    grad.b_y += err;
    let h_last = &cache.h[steps.len()];
    for (gw, h) in grad.w_y.data_mut().iter_mut().zip(h_last) {
        *gw += err * h;
    }
    let mut dh: Vec<f64> = params.w_y.data().iter().map(|w| w * err).collect();
    let mut dc_next = vec![0.0; hs];
    let mut da_i = vec![0.0; hs];
    let mut da_f = vec![0.0; hs];
    let mut da_o = vec![0.0; hs];
    let mut da_g = vec![0.0; hs];
    for t in (0..steps.len()).rev() {
        let (i, f, o, g, tc) = (&cache.i[t], &cache.f[t], &cache.o[t], &cache.g[t], &cache.tanh_c[t]);
        let c_prev = &cache.c[t];
        for k in 0..hs {
            let d_o = dh[k] * tc[k];
            let dc = dc_next[k] + dh[k] * o[k] * (1.0 - tc[k] * tc[k]);
            da_i[k] = dc * g[k] * i[k] * (1.0 - i[k]);
            da_f[k] = dc * c_prev[k] * f[k] * (1.0 - f[k]);
            da_o[k] = d_o * o[k] * (1.0 - o[k]);
            da_g[k] = dc * i[k] * (1.0 - g[k] * g[k]);
            dc_next[k] = dc * f[k];
        }
        let x = &steps[t];
        let h_prev = &cache.h[t];
        grad.input_gate.accumulate(&da_i, x, h_prev);
        grad.forget_gate.accumulate(&da_f, x, h_prev);
        grad.output_gate.accumulate(&da_o, x, h_prev);
        grad.candidate.accumulate(&da_g, x, h_prev);
        if t > 0 {
            dh.iter_mut().for_each(|v| *v = 0.0);
            params.input_gate.u.matvec_t_acc(&da_i, &mut dh);
            params.forget_gate.u.matvec_t_acc(&da_f, &mut dh);
            params.output_gate.u.matvec_t_acc(&da_o, &mut dh);
            params.candidate.u.matvec_t_acc(&da_g, &mut dh);
        }
    }
    Ok(())
}

/// Exact gradient of `½ (prediction − target)²` with respect to every parameter.
pub fn lstm_backward(
    params: &LstmParams,
    steps: &[Vec<f64>],
    target: f64,
    cache: &LstmCache,
) -> Result<LstmParams, NeuralError> {
    let mut grad = params.zeroed();
    lstm_backward_into(params, steps, target, cache, &mut grad)?;
    Ok(grad)
}

impl GradModel for LstmParams {
    type Sample = SeqSample;
    const LOSS_TO_MSE: f64 = 2.0;

    fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(14);
        for (_, g) in self.named_gates() {
            out.extend([g.w.data(), g.u.data(), g.b.data()]);
        }
        out.push(self.w_y.data());
        out.push(std::slice::from_ref(&self.b_y));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(14);
        for g in [&mut self.input_gate, &mut self.forget_gate, &mut self.output_gate, &mut self.candidate] {
            out.push(g.w.data_mut());
            out.push(g.u.data_mut());
            out.push(g.b.data_mut());
        }
        out.push(self.w_y.data_mut());
        out.push(std::slice::from_mut(&mut self.b_y));
        out
    }

    fn loss(&self, s: &SeqSample) -> Result<f64, NeuralError> {
        let (p, _) = lstm_forward(self, &s.steps)?;
        Ok(0.5 * (p - s.target) * (p - s.target))
    }

    fn accumulate_grad(&self, s: &SeqSample, grad: &mut Self) -> Result<f64, NeuralError> {
        let (p, cache) = lstm_forward(self, &s.steps)?;
        lstm_backward_into(self, &s.steps, s.target, &cache, grad)?;
        Ok(0.5 * (p - s.target) * (p - s.target))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_predict_zero() {
        let p = LstmParams::zeros(2, 3);
        let (pred, cache) = lstm_forward(&p, &[vec![1.0, -2.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(pred, 0.0);
        assert!(cache.h.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn readout_bias_only() {
        let mut p = LstmParams::zeros(1, 1);
        p.b_y = 0.7;
        assert_eq!(p.predict(&[vec![3.0]]).unwrap(), 0.7);
    }

    #[test]
    fn single_step_closed_form() {
        // All gate pre-activations zero: i = f = o = 0.5, g = 0 -> c = h = 0.
        let mut p = LstmParams::zeros(1, 1);
        p.w_y = Tensor::vector(vec![1.0]);
        assert_eq!(p.predict(&[vec![1.0]]).unwrap(), 0.0);
        // b_c = 1 -> g = tanh(1), c = 0.5 tanh(1), h = 0.5 tanh(0.5 tanh(1)).
        p.candidate.b = Tensor::vector(vec![1.0]);
        let expected = 0.5 * (0.5 * 1f64.tanh()).tanh();
        assert!((p.predict(&[vec![1.0]]).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn two_step_hand_recurrence() {
        // hidden 1, input 1; only w_c = 1, u_c = 0.5 nonzero.
        let mut p = LstmParams::zeros(1, 1);
        p.candidate.w = Tensor::matrix(1, 1, vec![1.0]);
        p.candidate.u = Tensor::matrix(1, 1, vec![0.5]);
        p.w_y = Tensor::vector(vec![2.0]);
        let x = [0.3, -0.8];
        let (mut c, mut h) = (0.0_f64, 0.0_f64);
        for xt in x {
            let g = (xt + 0.5 * h).tanh();
            c = 0.5 * c + 0.5 * g;
            h = 0.5 * c.tanh();
        }
        let pred = p.predict(&[vec![x[0]], vec![x[1]]]).unwrap();
        assert!((pred - 2.0 * h).abs() < 1e-15);
    }

    #[test]
    fn readout_bias_gradient_is_residual() {
        let p = LstmParams::init(2, 3, 4);
        let steps = vec![vec![0.1, 0.2], vec![-0.3, 0.9], vec![1.1, -0.4]];
        let (pred, cache) = lstm_forward(&p, &steps).unwrap();
        let g = lstm_backward(&p, &steps, 0.25, &cache).unwrap();
        assert!((g.b_y - (pred - 0.25)).abs() < 1e-12);
        let zero = lstm_backward(&p, &steps, pred, &cache).unwrap();
        assert!(zero.flat_params().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_cache_or_shape() {
        let p = LstmParams::init(2, 3, 1);
        let (_, cache) = lstm_forward(&p, &[vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            lstm_backward(&p, &[vec![0.0, 1.0], vec![1.0, 1.0]], 0.0, &cache),
            Err(NeuralError::Consistency(_))
        ));
        assert!(matches!(lstm_forward(&p, &[vec![0.0]]), Err(NeuralError::Shape(_))));
    }

    #[test]
    fn init_respects_bounds_and_gates_stay_in_range() {
        let p = LstmParams::init(3, 5, 9);
        p.validate().unwrap();
        let gate_bound = 1.0 / 8f64.sqrt();
        for (_, g) in p.named_gates() {
            for v in g.w.data().iter().chain(g.u.data()).chain(g.b.data()) {
                assert!(v.abs() <= gate_bound);
            }
        }
        assert!(p.w_y.data().iter().all(|v| v.abs() <= 1.0 / 5f64.sqrt()));
        let steps: Vec<Vec<f64>> = (0..6).map(|t| vec![0.5 * t as f64, -t as f64, 4.0]).collect();
        let (_, cache) = lstm_forward(&p, &steps).unwrap();
        for t in 0..6 {
            for gate in [&cache.i[t], &cache.f[t], &cache.o[t]] {
                assert!(gate.iter().all(|&v| v > 0.0 && v < 1.0));
            }
            assert!(cache.g[t].iter().chain(&cache.tanh_c[t]).all(|&v| v > -1.0 && v < 1.0));
            assert!(cache.c[t + 1].iter().all(|v| v.is_finite()));
        }
    }
}
