//! Tape-free eval-mode forward pass, generic over f32/f64.
//!
//! Mirrors `StudentModel::forward` operation for operation, so f64 results
//! agree with the recorded path to rounding.

use super::student::Batch;
use crate::corpus::EncodedDocument;
use crate::error::{Error, Result};
use crate::tensor::gemm::{gemm, Element, Layout};

pub(crate) struct DirectionView<'a, T> {
    pub w_ih: &'a [T],
    pub w_hh: &'a [T],
    pub bias: &'a [T],
}

pub(crate) struct WeightsView<'a, T> {
    pub vocab_size: usize,
    pub embedding_dim: usize,
    pub hidden: usize,
    pub classes: usize,
    pub embedding: &'a [T],
    pub directions: [DirectionView<'a, T>; 2],
    pub head_weight: &'a [T],
    pub head_bias: &'a [T],
}

fn sigmoid<T: Element>(x: T) -> T {
    if x >= T::ZERO {
        T::ONE / (T::ONE + (T::ZERO - x).exp())
    } else {
        let e = x.exp();
        e / (T::ONE + e)
    }
}

pub(crate) fn logits<T: Element>(
    w: &WeightsView<'_, T>,
    docs: &[EncodedDocument],
    batch_size: usize,
) -> Result<Vec<Vec<f64>>> {
    if batch_size == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }
    let mut out = Vec::with_capacity(docs.len());
    for chunk in docs.chunks(batch_size) {
        let refs: Vec<&EncodedDocument> = chunk.iter().collect();
        let batch = Batch::new(&refs, w.vocab_size)?;
        let flat = forward_batch(w, &batch);
        out.extend(flat.chunks_exact(w.classes).map(|r| r.iter().map(|v| v.to_f64()).collect()));
    }
    Ok(out)
}

pub(crate) fn forward_batch<T: Element>(w: &WeightsView<'_, T>, batch: &Batch) -> Vec<T> {
    let (e, h, k) = (w.embedding_dim, w.hidden, w.classes);
    let (b, steps) = (batch.size, batch.steps);
    let rows = steps * b;

    let mut x = vec![T::ZERO; rows * e];
    for (r, &id) in batch.forward_ids.iter().enumerate() {
        x[r * e..(r + 1) * e].copy_from_slice(&w.embedding[id * e..(id + 1) * e]);
    }

    let mut pooled = vec![T::ZERO; b * 2 * h];
    let mut reversed = Vec::new();
    let mut proj = vec![T::ZERO; rows * 4 * h];
    let mut z = vec![T::ZERO; b * 4 * h];
    let mut hs = vec![T::ZERO; b * h];
    let mut cs = vec![T::ZERO; b * h];
    let mut pool = vec![T::ZERO; b * h];

    for (d, dir) in w.directions.iter().enumerate() {
        let input: &[T] = if d == 0 {
            &x
        } else {
            reversed.clear();
            for &src in &batch.reverse_rows {
                reversed.extend_from_slice(&x[src * e..(src + 1) * e]);
            }
            &reversed
        };
        gemm(rows, e, 4 * h, input, Layout::Normal, dir.w_ih, Layout::Normal, T::ZERO, &mut proj);
        for row in proj.chunks_exact_mut(4 * h) {
            for (v, &bv) in row.iter_mut().zip(dir.bias) {
                *v += bv;
            }
        }
        hs.iter_mut().for_each(|v| *v = T::ZERO);
        cs.iter_mut().for_each(|v| *v = T::ZERO);

        for t in 0..steps {
            z.copy_from_slice(&proj[t * b * 4 * h..(t + 1) * b * 4 * h]);
            gemm(b, h, 4 * h, &hs, Layout::Normal, dir.w_hh, Layout::Normal, T::ONE, &mut z);
            for row in 0..b {
                let zr = &z[row * 4 * h..(row + 1) * 4 * h];
                let live = t < batch.lengths[row];
                for j in 0..h {
                    let i_g = sigmoid(zr[j]);
                    let f_g = sigmoid(zr[h + j]);
                    let g_g = zr[2 * h + j].tanh();
                    let o_g = sigmoid(zr[3 * h + j]);
                    let idx = row * h + j;
                    let keep = f_g * cs[idx];
                    let write = i_g * g_g;
                    let c = keep + write;
                    let hv = o_g * c.tanh();
                    cs[idx] = c;
                    hs[idx] = hv;
                    if t == 0 || (live && hv > pool[idx]) {
                        pool[idx] = hv;
                    }
                }
            }
        }
        for row in 0..b {
            pooled[row * 2 * h + d * h..row * 2 * h + (d + 1) * h].copy_from_slice(&pool[row * h..(row + 1) * h]);
        }
    }

    let mut logits = vec![T::ZERO; b * k];
    gemm(b, 2 * h, k, &pooled, Layout::Normal, w.head_weight, Layout::Normal, T::ZERO, &mut logits);
    for row in logits.chunks_exact_mut(k) {
        for (v, &bv) in row.iter_mut().zip(w.head_bias) {
            *v += bv;
        }
    }
    logits
}

/// Owned f32 copy of a student's weights for reduced-precision benchmarking.
#[derive(Debug, Clone)]
pub struct StudentF32 {
    vocab_size: usize,
    embedding_dim: usize,
    hidden: usize,
    classes: usize,
    tensors: Vec<Vec<f32>>,
}

impl StudentF32 {
    pub fn from_model(model: &super::StudentModel) -> Self {
        StudentF32 {
            vocab_size: model.config.vocab_size,
            embedding_dim: model.config.embedding_dim,
            hidden: model.config.hidden_units,
            classes: model.config.num_classes,
            tensors: model
                .tensors()
                .iter()
                .map(|t| t.data().iter().map(|&v| v as f32).collect())
                .collect(),
        }
    }

    fn view(&self) -> WeightsView<'_, f32> {
        let t = &self.tensors;
        WeightsView {
            vocab_size: self.vocab_size,
            embedding_dim: self.embedding_dim,
            hidden: self.hidden,
            classes: self.classes,
            embedding: &t[0],
            directions: [
                DirectionView {
                    w_ih: &t[1],
                    w_hh: &t[2],
                    bias: &t[3],
                },
                DirectionView {
                    w_ih: &t[4],
                    w_hh: &t[5],
                    bias: &t[6],
                },
            ],
            head_weight: &t[7],
            head_bias: &t[8],
        }
    }

    pub fn logits(&self, docs: &[EncodedDocument], batch_size: usize) -> Result<Vec<Vec<f64>>> {
        logits(&self.view(), docs, batch_size)
    }
}
