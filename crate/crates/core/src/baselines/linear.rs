use serde::{Deserialize, Serialize};

use super::{invalid, BaselineError, FittedBaseline, FlatDataset};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct LinearConfig {
    /// Ridge penalty on the weights (never on the intercept).
    pub ridge_lambda: f64,
}

/// Solves `a x = b` for a symmetric positive semi-definite `a` (row-major,
/// `k x k`). The system is Jacobi-scaled first so the singularity test on
/// pivots is scale-free.
pub fn solve_linear_system(a: &[f64], b: &[f64]) -> Result<Vec<f64>, BaselineError> {
    let k = b.len();
    assert_eq!(a.len(), k * k);
    let scale: Vec<f64> = (0..k)
        .map(|i| {
            let d = a[i * k + i];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    if scale.contains(&0.0) {
        return Err(BaselineError::Singular);
    }
    let mut m: Vec<f64> = (0..k * k).map(|idx| a[idx] * scale[idx / k] * scale[idx % k]).collect();
    let mut rhs: Vec<f64> = b.iter().zip(&scale).map(|(v, s)| v * s).collect();
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&i, &j| m[i * k + col].abs().total_cmp(&m[j * k + col].abs()))
            .expect("non-empty range");
        if m[pivot_row * k + col].abs() < 1e-10 {
            return Err(BaselineError::Singular);
        }
        if pivot_row != col {
            for c in 0..k {
                m.swap(col * k + c, pivot_row * k + c);
            }
            rhs.swap(col, pivot_row);
        }
        let p = m[col * k + col];
        for r in col + 1..k {
            let f = m[r * k + col] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..k {
                m[r * k + c] -= f * m[col * k + c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut z = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| m[r * k + c] * z[c]).sum();
        z[r] = (rhs[r] - s) / m[r * k + r];
    }
    Ok(z.iter().zip(&scale).map(|(v, s)| v * s).collect())
}

/// Least squares with optional ridge penalty via the intercept-augmented
/// normal equations.
pub fn linear_fit(data: &FlatDataset, cfg: &LinearConfig) -> Result<FittedBaseline, BaselineError> {
    if !(cfg.ridge_lambda >= 0.0) || !cfg.ridge_lambda.is_finite() {
        return Err(invalid("ridge_lambda", "must be a non-negative finite number"));
    }
    let (n, d) = (data.n(), data.d());
    let k = d + 1;
    let mut gram = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    let mut aug = vec![1.0; k];
    for i in 0..n {
        aug[..d].copy_from_slice(data.row(i));
        let yi = data.y()[i];
        for r in 0..k {
            let ar = aug[r];
            rhs[r] += ar * yi;
            for c in r..k {
                gram[r * k + c] += ar * aug[c];
            }
        }
    }
    for r in 0..k {
        for c in 0..r {
            gram[r * k + c] = gram[c * k + r];
        }
    }
    for j in 0..d {
        gram[j * k + j] += cfg.ridge_lambda;
    }
    let sol = solve_linear_system(&gram, &rhs)?;
    Ok(FittedBaseline::Linear { weights: Tensor::vector(sol[..d].to_vec()), intercept: sol[d], config: *cfg })
}
