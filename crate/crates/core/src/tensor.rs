//! Shape-tagged dense arrays used for every persisted weight.
//!
//! On the wire a tensor is `{"shape": [rows, cols], "data": [...]}` with the
//! data in row-major order. Vectors carry a one-element shape.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor")]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawTensor> for Tensor {
    type Error = String;

    fn try_from(raw: RawTensor) -> Result<Self, Self::Error> {
        Tensor::from_parts(raw.shape, raw.data)
    }
}

impl Tensor {
    pub fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, String> {
        if shape.is_empty() || shape.len() > 2 {
            return Err(format!("tensor rank must be 1 or 2, got {}", shape.len()));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(format!(
                "tensor shape {:?} needs {} values, got {}",
                shape,
                expected,
                data.len()
            ));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(format!("tensor entry {bad} is not finite"));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros_matrix(rows: usize, cols: usize) -> Self {
        Self { shape: vec![rows, cols], data: vec![0.0; rows * cols] }
    }

    pub fn zeros_vector(len: usize) -> Self {
        Self { shape: vec![len], data: vec![0.0; len] }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length");
        Self { shape: vec![rows, cols], data }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self { shape: vec![data.len()], data }
    }

    pub fn zeros_like(&self) -> Self {
        Self { shape: self.shape.clone(), data: vec![0.0; self.data.len()] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(1)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols() + c]
    }

    /// `out[r] += Σ_c self[r, c] * x[c]`
    #[inline]
    pub fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        let cols = self.cols();
        debug_assert_eq!(x.len(), cols);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(cols)) {
            *o += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// `out[c] += Σ_r self[r, c] * y[r]`
    #[inline]
    pub fn matvec_t_acc(&self, y: &[f64], out: &mut [f64]) {
        let cols = self.cols();
        for (&yr, row) in y.iter().zip(self.data.chunks_exact(cols)) {
            if yr == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * yr;
            }
        }
    }

    /// `self[r, c] += a[r] * b[c]`
    #[inline]
    pub fn outer_acc(&mut self, a: &[f64], b: &[f64]) {
        let cols = self.cols();
        for (&ar, row) in a.iter().zip(self.data.chunks_exact_mut(cols)) {
            if ar == 0.0 {
                continue;
            }
            for (w, bc) in row.iter_mut().zip(b) {
                *w += ar * bc;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
