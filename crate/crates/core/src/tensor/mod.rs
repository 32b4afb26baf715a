//! Dense tensors and a minimal reverse-mode autodiff engine.
//!
//! Values are row-major `f64` arrays. Differentiable computations are recorded
//! on a [`Tape`] in execution order and replayed backwards by
//! [`Tape::backward`]. Matrices are the working shape everywhere: a tensor of
//! shape `[d0, d1, ..., dn]` is viewed as `(d0·…·d(n-1)) × dn`.

pub mod functional;
pub mod gemm;
pub mod gradcheck;
mod lstm;
mod tape;

pub use lstm::{lstm_cell, lstm_step, LstmVars, GATES};
pub use tape::{Mode, Tape, Var};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
    requires_grad: bool,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::dim(format!(
                "shape must be a non-empty list of positive extents, got {shape:?}"
            )));
        }
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::dim(format!(
                "shape {shape:?} holds {numel} elements but {} values were given",
                data.len()
            )));
        }
        Ok(Tensor {
            shape,
            data,
            grad: None,
            requires_grad: false,
        })
    }

    /// Builds a 2-D tensor from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dim("ragged rows"));
        }
        Tensor::new(vec![rows.len(), cols], rows.concat())
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; numel],
            grad: None,
            requires_grad: false,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![value],
            grad: None,
            requires_grad: false,
        }
    }

    /// Internal constructor for shapes already known to be consistent.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor {
            shape,
            data,
            grad: None,
            requires_grad: false,
        }
    }

    pub fn with_requires_grad(mut self, requires_grad: bool) -> Self {
        self.requires_grad = requires_grad;
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// Row count of the matrix view.
    pub fn rows(&self) -> usize {
        self.data.len() / self.cols()
    }

    /// Column count of the matrix view (the last extent).
    pub fn cols(&self) -> usize {
        *self.shape.last().expect("shape is never empty")
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let c = self.cols();
        &self.data[row * c..(row + 1) * c]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Plain (unrecorded) matrix product.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = (a.rows(), a.cols());
    let (k2, n) = (b.rows(), b.cols());
    if k != k2 {
        return Err(Error::dim(format!(
            "matmul: inner dimensions disagree, {:?} · {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut out = vec![0.0; m * n];
    gemm::gemm(m, k, n, a.data(), gemm::Layout::Normal, b.data(), gemm::Layout::Normal, 0.0, &mut out);
    Ok(Tensor::from_parts(vec![m, n], out))
}

/// Column-wise maximum over the time (row) axis of a `T×d` matrix.
pub fn max_over_time(h: &Tensor) -> Result<Tensor> {
    if h.shape().len() != 2 {
        return Err(Error::dim(format!("max_over_time expects T×d, got {:?}", h.shape())));
    }
    let d = h.cols();
    let mut out = h.row(0).to_vec();
    for t in 1..h.rows() {
        for (o, &v) in out.iter_mut().zip(h.row(t)) {
            if v > *o {
                *o = v;
            }
        }
    }
    Ok(Tensor::from_parts(vec![1, d], out))
}
