use super::{GradModel, NeuralError};

/// `|a − n| / max(|a|, |n|, 1e-12)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

fn nudge<M: GradModel>(model: &mut M, mut flat: usize, delta: f64) {
    for t in model.tensors_mut() {
        if flat < t.len() {
            t[flat] += delta;
            return;
        }
        flat -= t.len();
    }
    panic!("parameter index out of range");
}

fn check_epsilon(epsilon: f64) -> Result<(), NeuralError> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(super::invalid("epsilon", format!("must lie in [1e-7, 1e-3], got {epsilon}")));
    }
    Ok(())
}

/// `(analytic, numeric)` for every parameter, where numeric is the central
/// difference `(L(θ+ε) − L(θ−ε)) / 2ε`.
pub fn gradient_pairs<M: GradModel>(model: &M, sample: &M::Sample, epsilon: f64) -> Result<Vec<(f64, f64)>, NeuralError> {
    check_epsilon(epsilon)?;
    let mut grad = model.zeroed();
    model.accumulate_grad(sample, &mut grad)?;
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(grad.n_params());
    for (k, a) in grad.flat_params().into_iter().enumerate() {
        nudge(&mut probe, k, epsilon);
        let up = probe.loss(sample)?;
        nudge(&mut probe, k, -2.0 * epsilon);
        let down = probe.loss(sample)?;
        nudge(&mut probe, k, epsilon);
        out.push((a, (up - down) / (2.0 * epsilon)));
    }
    Ok(out)
}

/// Largest per-coordinate relative error between the analytic gradient and
/// central differences.
pub fn gradient_check<M: GradModel>(model: &M, sample: &M::Sample, epsilon: f64) -> Result<f64, NeuralError> {
    Ok(gradient_pairs(model, sample, epsilon)?.into_iter().map(|(a, n)| relative_error(a, n)).fold(0.0, f64::max))
}

/// Like [`gradient_check`] with a tolerance, but each coordinate may also be
/// off by the rounding noise of the difference quotient,
/// `16 ε_mach max(|L|, 1) / ε`. Coordinates whose true value sits near that
/// floor (around 1e-10 at ε = 1e-5) otherwise fail the pure relative test.
pub fn gradient_agrees<M: GradModel>(model: &M, sample: &M::Sample, epsilon: f64, rel_tol: f64) -> Result<bool, NeuralError> {
    let floor = 16.0 * f64::EPSILON * model.loss(sample)?.abs().max(1.0) / epsilon;
    Ok(gradient_pairs(model, sample, epsilon)?
        .into_iter()
        .all(|(a, n)| (a - n).abs() <= rel_tol * a.abs().max(n.abs()) + floor))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert_eq!(relative_error(1e-13, 0.0), 0.1);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
    }

    /// `L = Σ c_i θ_i² / 2` with the gradient scaled by `bias`.
    #[derive(Clone)]
    struct Quadratic {
        theta: Vec<f64>,
        c: Vec<f64>,
        bias: f64,
    }

    impl GradModel for Quadratic {
        type Sample = ();
        const LOSS_TO_MSE: f64 = 1.0;
        fn tensors(&self) -> Vec<&[f64]> {
            vec![&self.theta]
        }
        fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.theta]
        }
        fn loss(&self, _: &()) -> Result<f64, NeuralError> {
            Ok(self.theta.iter().zip(&self.c).map(|(t, c)| 0.5 * c * t * t).sum())
        }
        fn accumulate_grad(&self, s: &(), grad: &mut Self) -> Result<f64, NeuralError> {
            for ((g, t), c) in grad.theta.iter_mut().zip(&self.theta).zip(&self.c) {
                *g += self.bias * c * t;
            }
            self.loss(s)
        }
    }

    #[test]
    fn one_percent_gradient_error_is_caught() {
        let q = Quadratic { theta: vec![0.3, -1.2, 2.0], c: vec![1.0, 0.5, 3.0], bias: 1.0 };
        assert!(gradient_check(&q, &(), 1e-5).unwrap() < 1e-8);
        assert!(gradient_agrees(&q, &(), 1e-5, 1e-4).unwrap());
        let bad = Quadratic { bias: 1.01, ..q };
        assert!(gradient_check(&bad, &(), 1e-5).unwrap() > 5e-3);
        assert!(!gradient_agrees(&bad, &(), 1e-5, 1e-4).unwrap());
    }

    #[test]
    fn roundoff_only_errors_pass_the_floor_test() {
        // One coordinate with a 1e-11 gradient next to an O(1) loss.
        let q = Quadratic { theta: vec![1e-11, 1.0], c: vec![1.0, 1.0], bias: 1.0 };
        assert!(gradient_check(&q, &(), 1e-5).unwrap() > 1e-4);
        assert!(gradient_agrees(&q, &(), 1e-5, 1e-4).unwrap());
    }
}
