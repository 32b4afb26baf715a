//! Record-then-reverse autodiff.
//!
//! Every op appends one node holding its output value, so node indices are a
//! topological order by construction. `backward` walks the nodes once, from
//! the output down to index 0, accumulating (summing) into input gradients.

use rand::Rng;

use super::functional;
use super::gemm::{gemm, Layout};
use super::Tensor;
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRowBias(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    SliceCols { x: Var, start: usize },
    SliceRows { x: Var, start: usize },
    ConcatCols(Var, Var),
    GatherRows { x: Var, index: Vec<usize> },
    Dropout { x: Var, mask: Vec<f64> },
    MaxRows { x: Var, argmax: Vec<usize> },
    MaskedMaxTime { steps: Vec<Var>, argmax: Vec<usize> },
    /// Scalar output whose gradient w.r.t. `x` was computed in the forward pass.
    Fused { x: Var, local_grad: Vec<f64> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// The computation record: an ordered list of applied operations.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Registers a tensor; it receives a gradient iff `requires_grad` is set.
    pub fn leaf(&mut self, tensor: Tensor) -> Var {
        self.nodes.push(Node {
            value: tensor,
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn param(&mut self, tensor: Tensor) -> Var {
        self.leaf(tensor.with_requires_grad(true))
    }

    pub fn constant(&mut self, tensor: Tensor) -> Var {
        self.leaf(tensor.with_requires_grad(false))
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].value.grad()
    }

    fn requires(&self, v: Var) -> bool {
        self.nodes[v.0].value.requires_grad
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<f64>, op: Op, requires_grad: bool) -> Var {
        let value = Tensor::from_parts(shape, data).with_requires_grad(requires_grad);
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    fn dims(&self, v: Var) -> (usize, usize) {
        let t = self.value(v);
        (t.rows(), t.cols())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims(a);
        let (k2, n) = self.dims(b);
        if k != k2 {
            return Err(Error::dim(format!(
                "matmul: inner dimensions disagree, {:?} · {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        let mut out = vec![0.0; m * n];
        gemm(m, k, n, self.value(a).data(), Layout::Normal, self.value(b).data(), Layout::Normal, 0.0, &mut out);
        let rg = self.requires(a) || self.requires(b);
        Ok(self.push(vec![m, n], out, Op::MatMul(a, b), rg))
    }

    fn same_shape(&self, a: Var, b: Var, op: &str) -> Result<()> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::dim(format!(
                "{op}: shapes differ, {:?} vs {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let out: Vec<f64> = self.value(a).data().iter().zip(self.value(b).data()).map(|(x, y)| x + y).collect();
        let shape = self.value(a).shape().to_vec();
        let rg = self.requires(a) || self.requires(b);
        Ok(self.push(shape, out, Op::Add(a, b), rg))
    }

    /// Adds a `1×n` (or `[n]`) bias to every row of an `m×n` matrix.
    pub fn add_row_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (m, n) = self.dims(x);
        if self.value(bias).numel() != n {
            return Err(Error::dim(format!(
                "add_row_bias: bias {:?} does not match row width of {:?}",
                self.value(bias).shape(),
                self.value(x).shape()
            )));
        }
        let b = self.value(bias).data();
        let mut out = self.value(x).data().to_vec();
        for r in 0..m {
            for (o, &bv) in out[r * n..(r + 1) * n].iter_mut().zip(b) {
                *o += bv;
            }
        }
        let rg = self.requires(x) || self.requires(bias);
        Ok(self.push(vec![m, n], out, Op::AddRowBias(x, bias), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let out: Vec<f64> = self.value(a).data().iter().zip(self.value(b).data()).map(|(x, y)| x * y).collect();
        let shape = self.value(a).shape().to_vec();
        let rg = self.requires(a) || self.requires(b);
        Ok(self.push(shape, out, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let out: Vec<f64> = self.value(x).data().iter().map(|v| v * factor).collect();
        let shape = self.value(x).shape().to_vec();
        let rg = self.requires(x);
        self.push(shape, out, Op::Scale(x, factor), rg)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let out = functional::sigmoid_vec(self.value(x).data());
        let shape = self.value(x).shape().to_vec();
        let rg = self.requires(x);
        self.push(shape, out, Op::Sigmoid(x), rg)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let out: Vec<f64> = self.value(x).data().iter().map(|v| v.tanh()).collect();
        let shape = self.value(x).shape().to_vec();
        let rg = self.requires(x);
        self.push(shape, out, Op::Tanh(x), rg)
    }

    /// Columns `start..end` of a matrix.
    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let (m, n) = self.dims(x);
        if start >= end || end > n {
            return Err(Error::dim(format!("slice_cols {start}..{end} out of range for width {n}")));
        }
        let w = end - start;
        let src = self.value(x).data();
        let mut out = Vec::with_capacity(m * w);
        for r in 0..m {
            out.extend_from_slice(&src[r * n + start..r * n + end]);
        }
        let rg = self.requires(x);
        Ok(self.push(vec![m, w], out, Op::SliceCols { x, start }, rg))
    }

    /// Rows `start..end` of a matrix.
    pub fn slice_rows(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let (m, n) = self.dims(x);
        if start >= end || end > m {
            return Err(Error::dim(format!("slice_rows {start}..{end} out of range for {m} rows")));
        }
        let out = self.value(x).data()[start * n..end * n].to_vec();
        let rg = self.requires(x);
        Ok(self.push(vec![end - start, n], out, Op::SliceRows { x, start }, rg))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ma, na) = self.dims(a);
        let (mb, nb) = self.dims(b);
        if ma != mb {
            return Err(Error::dim(format!("concat_cols: row counts differ, {ma} vs {mb}")));
        }
        let (da, db) = (self.value(a).data(), self.value(b).data());
        let mut out = Vec::with_capacity(ma * (na + nb));
        for r in 0..ma {
            out.extend_from_slice(&da[r * na..(r + 1) * na]);
            out.extend_from_slice(&db[r * nb..(r + 1) * nb]);
        }
        let rg = self.requires(a) || self.requires(b);
        Ok(self.push(vec![ma, na + nb], out, Op::ConcatCols(a, b), rg))
    }

    /// Selects rows by index (embedding lookup, sequence reversal).
    pub fn gather_rows(&mut self, x: Var, index: Vec<usize>) -> Result<Var> {
        let (m, n) = self.dims(x);
        if let Some(&bad) = index.iter().find(|&&i| i >= m) {
            return Err(Error::Encoding(format!("row index {bad} out of range for {m} rows")));
        }
        if index.is_empty() {
            return Err(Error::EmptySequence("gather_rows with no indices".into()));
        }
        let src = self.value(x).data();
        let mut out = Vec::with_capacity(index.len() * n);
        for &i in &index {
            out.extend_from_slice(&src[i * n..(i + 1) * n]);
        }
        let rg = self.requires(x);
        Ok(self.push(vec![index.len(), n], out, Op::GatherRows { x, index }, rg))
    }

    /// Inverted dropout. Eval mode and `rate == 0` return `x` unchanged.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, rate: f64, mode: Mode, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::config(format!("dropout rate must lie in [0, 1), got {rate}")));
        }
        if mode == Mode::Eval || rate == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..self.value(x).numel())
            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let out: Vec<f64> = self.value(x).data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let shape = self.value(x).shape().to_vec();
        let rg = self.requires(x);
        Ok(self.push(shape, out, Op::Dropout { x, mask }, rg))
    }

    /// Column-wise max over the rows of a `T×d` matrix, giving `1×d`.
    pub fn max_over_time(&mut self, x: Var) -> Result<Var> {
        let (t, d) = self.dims(x);
        if t == 0 {
            return Err(Error::EmptySequence("max_over_time over zero steps".into()));
        }
        let src = self.value(x).data();
        let mut out = src[..d].to_vec();
        let mut argmax = vec![0; d];
        for r in 1..t {
            for c in 0..d {
                let v = src[r * d + c];
                if v > out[c] {
                    out[c] = v;
                    argmax[c] = r;
                }
            }
        }
        let rg = self.requires(x);
        Ok(self.push(vec![1, d], out, Op::MaxRows { x, argmax }, rg))
    }

    /// Max over time for a padded batch. `steps[t]` is the `B×d` state at time
    /// `t`; row `b` only considers `t < lengths[b]`.
    pub fn masked_max_over_time(&mut self, steps: &[Var], lengths: &[usize]) -> Result<Var> {
        let first = *steps
            .first()
            .ok_or_else(|| Error::EmptySequence("masked_max_over_time over zero steps".into()))?;
        let (b, d) = self.dims(first);
        if lengths.len() != b {
            return Err(Error::dim(format!("{} lengths for a batch of {b}", lengths.len())));
        }
        for &s in steps {
            if self.dims(s) != (b, d) {
                return Err(Error::dim("masked_max_over_time: step shapes differ"));
            }
        }
        if let Some(row) = lengths.iter().position(|&l| l == 0 || l > steps.len()) {
            return Err(Error::EmptySequence(format!(
                "row {row} has length {} with {} steps",
                lengths[row],
                steps.len()
            )));
        }
        let mut out = self.value(first).data().to_vec();
        let mut argmax = vec![0usize; b * d];
        for (t, &s) in steps.iter().enumerate().skip(1) {
            let src = self.value(s).data();
            for (row, &len) in lengths.iter().enumerate() {
                if t >= len {
                    continue;
                }
                for c in 0..d {
                    let i = row * d + c;
                    if src[i] > out[i] {
                        out[i] = src[i];
                        argmax[i] = t;
                    }
                }
            }
        }
        let rg = steps.iter().any(|&s| self.requires(s));
        Ok(self.push(
            vec![b, d],
            out,
            Op::MaskedMaxTime {
                steps: steps.to_vec(),
                argmax,
            },
            rg,
        ))
    }

    /// Records a scalar whose gradient w.r.t. `x` is already known.
    pub fn fused_scalar(&mut self, x: Var, value: f64, local_grad: Vec<f64>) -> Result<Var> {
        if local_grad.len() != self.value(x).numel() {
            return Err(Error::dim(format!(
                "fused_scalar: gradient has {} entries for an input of {}",
                local_grad.len(),
                self.value(x).numel()
            )));
        }
        let rg = self.requires(x);
        Ok(self.push(vec![1], vec![value], Op::Fused { x, local_grad }, rg))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let n = self.value(x).numel();
        let s = self.value(x).data().iter().sum();
        self.fused_scalar(x, s, vec![1.0; n]).expect("shapes agree")
    }

    /// `Σ x ⊙ w` for constant weights; handy for projecting tensors to a scalar.
    pub fn weighted_sum(&mut self, x: Var, weights: &[f64]) -> Result<Var> {
        if weights.len() != self.value(x).numel() {
            return Err(Error::dim("weighted_sum: weight count differs from input size"));
        }
        let s = self.value(x).data().iter().zip(weights).map(|(a, b)| a * b).sum();
        self.fused_scalar(x, s, weights.to_vec())
    }

    /// Reverse pass from a scalar output.
    pub fn backward(&mut self, output: Var) -> Result<()> {
        if self.value(output).numel() != 1 {
            return Err(Error::dim(format!(
                "backward needs a scalar output, got shape {:?}",
                self.value(output).shape()
            )));
        }
        self.backward_with(output, vec![1.0])
    }

    /// Reverse pass seeded with an explicit output gradient.
    pub fn backward_with(&mut self, output: Var, seed: Vec<f64>) -> Result<()> {
        if seed.len() != self.value(output).numel() {
            return Err(Error::dim("backward seed does not match output size"));
        }
        for node in &mut self.nodes {
            node.value.grad = None;
        }
        if !self.requires(output) {
            return Ok(());
        }
        self.nodes[output.0].value.grad = Some(seed);

        for i in (0..=output.0).rev() {
            let (before, rest) = self.nodes.split_at_mut(i);
            let node = &mut rest[0];
            if !node.value.requires_grad {
                continue;
            }
            let Some(g) = node.value.grad.take() else {
                continue;
            };
            propagate(before, &node.op, &node.value, &g);
            node.value.grad = Some(g);
        }
        Ok(())
    }
}

fn take_grad(nodes: &mut [Node], v: Var) -> Option<Vec<f64>> {
    let t = &mut nodes[v.0].value;
    if !t.requires_grad {
        return None;
    }
    Some(t.grad.take().unwrap_or_else(|| vec![0.0; t.numel()]))
}

fn put_grad(nodes: &mut [Node], v: Var, g: Vec<f64>) {
    nodes[v.0].value.grad = Some(g);
}

/// Applies `f(grad_buffer)` to the gradient of `v` if it requires one.
fn with_grad(nodes: &mut [Node], v: Var, f: impl FnOnce(&mut [f64], &[Node])) {
    if let Some(mut g) = take_grad(nodes, v) {
        f(&mut g, nodes);
        put_grad(nodes, v, g);
    }
}

fn propagate(nodes: &mut [Node], op: &Op, out: &Tensor, g: &[f64]) {
    match op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let (m, k) = (nodes[a.0].value.rows(), nodes[a.0].value.cols());
            let n = nodes[b.0].value.cols();
            // dA += dY·Bᵀ
            with_grad(nodes, *a, |ga, nodes| {
                gemm(m, n, k, g, Layout::Normal, nodes[b.0].value.data(), Layout::Transposed, 1.0, ga);
            });
            // dB += Aᵀ·dY
            with_grad(nodes, *b, |gb, nodes| {
                gemm(k, m, n, nodes[a.0].value.data(), Layout::Transposed, g, Layout::Normal, 1.0, gb);
            });
        }
        Op::Add(a, b) => {
            for v in [*a, *b] {
                with_grad(nodes, v, |gv, _| add_into(gv, g));
            }
        }
        Op::AddRowBias(x, bias) => {
            with_grad(nodes, *x, |gx, _| add_into(gx, g));
            let n = out.cols();
            with_grad(nodes, *bias, |gb, _| {
                for row in g.chunks_exact(n) {
                    add_into(gb, row);
                }
            });
        }
        Op::Mul(a, b) => {
            with_grad(nodes, *a, |ga, nodes| {
                for ((d, &gi), &bv) in ga.iter_mut().zip(g).zip(nodes[b.0].value.data()) {
                    *d += gi * bv;
                }
            });
            with_grad(nodes, *b, |gb, nodes| {
                for ((d, &gi), &av) in gb.iter_mut().zip(g).zip(nodes[a.0].value.data()) {
                    *d += gi * av;
                }
            });
        }
        Op::Scale(x, factor) => {
            with_grad(nodes, *x, |gx, _| {
                for (d, &gi) in gx.iter_mut().zip(g) {
                    *d += gi * factor;
                }
            });
        }
        Op::Sigmoid(x) => {
            with_grad(nodes, *x, |gx, _| {
                for ((d, &gi), &y) in gx.iter_mut().zip(g).zip(out.data()) {
                    *d += gi * y * (1.0 - y);
                }
            });
        }
        Op::Tanh(x) => {
            with_grad(nodes, *x, |gx, _| {
                for ((d, &gi), &y) in gx.iter_mut().zip(g).zip(out.data()) {
                    *d += gi * (1.0 - y * y);
                }
            });
        }
        Op::SliceCols { x, start } => {
            let w = out.cols();
            let n = nodes[x.0].value.cols();
            with_grad(nodes, *x, |gx, _| {
                for (r, row) in g.chunks_exact(w).enumerate() {
                    add_into(&mut gx[r * n + start..r * n + start + w], row);
                }
            });
        }
        Op::SliceRows { x, start } => {
            let n = out.cols();
            with_grad(nodes, *x, |gx, _| {
                add_into(&mut gx[start * n..start * n + g.len()], g);
            });
        }
        Op::ConcatCols(a, b) => {
            let na = nodes[a.0].value.cols();
            let nb = nodes[b.0].value.cols();
            with_grad(nodes, *a, |ga, _| {
                for (r, row) in g.chunks_exact(na + nb).enumerate() {
                    add_into(&mut ga[r * na..(r + 1) * na], &row[..na]);
                }
            });
            with_grad(nodes, *b, |gb, _| {
                for (r, row) in g.chunks_exact(na + nb).enumerate() {
                    add_into(&mut gb[r * nb..(r + 1) * nb], &row[na..]);
                }
            });
        }
        Op::GatherRows { x, index } => {
            let n = out.cols();
            with_grad(nodes, *x, |gx, _| {
                for (row, &i) in g.chunks_exact(n).zip(index) {
                    add_into(&mut gx[i * n..(i + 1) * n], row);
                }
            });
        }
        Op::Dropout { x, mask } => {
            with_grad(nodes, *x, |gx, _| {
                for ((d, &gi), &m) in gx.iter_mut().zip(g).zip(mask) {
                    *d += gi * m;
                }
            });
        }
        Op::MaxRows { x, argmax } => {
            let d = out.cols();
            with_grad(nodes, *x, |gx, _| {
                for (c, &r) in argmax.iter().enumerate() {
                    gx[r * d + c] += g[c];
                }
            });
        }
        Op::MaskedMaxTime { steps, argmax } => {
            for (t, &s) in steps.iter().enumerate() {
                with_grad(nodes, s, |gs, _| {
                    for (i, &am) in argmax.iter().enumerate() {
                        if am == t {
                            gs[i] += g[i];
                        }
                    }
                });
            }
        }
        Op::Fused { x, local_grad } => {
            let scale = g[0];
            with_grad(nodes, *x, |gx, _| {
                for (d, &l) in gx.iter_mut().zip(local_grad) {
                    *d += scale * l;
                }
            });
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn mat(rows: &[Vec<f64>]) -> Tensor {
        Tensor::from_rows(rows).unwrap()
    }

    #[test]
    fn fan_out_accumulates() {
        // y = x·x + 3x at x = 2 -> dy/dx = 2x + 3 = 7, via two paths through x.
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(2.0));
        let sq = tape.mul(x, x).unwrap();
        let lin = tape.scale(x, 3.0);
        let y = tape.add(sq, lin).unwrap();
        tape.backward(y).unwrap();
        assert_eq!(tape.value(y).data(), &[10.0]);
        assert_eq!(tape.grad(x).unwrap(), &[7.0]);
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut tape = Tape::new();
        let a = tape.constant(mat(&[vec![1.0, 2.0]]));
        let b = tape.param(mat(&[vec![3.0], vec![4.0]]));
        let y = tape.matmul(a, b).unwrap();
        tape.backward(y).unwrap();
        assert!(tape.grad(a).is_none());
        assert_eq!(tape.grad(b).unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn backward_requires_scalar() {
        let mut tape = Tape::new();
        let a = tape.param(mat(&[vec![1.0, 2.0]]));
        assert!(tape.backward(a).is_err());
    }

    #[test]
    fn repeated_backward_does_not_double_count() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(3.0));
        let y = tape.mul(x, x).unwrap();
        tape.backward(y).unwrap();
        tape.backward(y).unwrap();
        assert_eq!(tape.grad(x).unwrap(), &[6.0]);
    }

    #[test]
    fn max_over_time_routes_to_argmax() {
        let mut tape = Tape::new();
        let h = tape.param(mat(&[vec![1.0, 5.0], vec![3.0, 2.0]]));
        let m = tape.max_over_time(h).unwrap();
        assert_eq!(tape.value(m).data(), &[3.0, 5.0]);
        let s = tape.sum(m);
        tape.backward(s).unwrap();
        assert_eq!(tape.grad(h).unwrap(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn masked_pool_ignores_steps_past_length() {
        let mut tape = Tape::new();
        let s0 = tape.param(mat(&[vec![1.0], vec![1.0]]));
        let s1 = tape.param(mat(&[vec![9.0], vec![9.0]]));
        let p = tape.masked_max_over_time(&[s0, s1], &[1, 2]).unwrap();
        assert_eq!(tape.value(p).data(), &[1.0, 9.0]);
        assert!(tape.masked_max_over_time(&[s0, s1], &[0, 2]).is_err());
        assert!(matches!(tape.masked_max_over_time(&[], &[]), Err(Error::EmptySequence(_))));
    }

    #[test]
    fn dropout_contract() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![4, 8], (0..32).map(f64::from).collect()).unwrap());
        let mut rng = stream(1, Stream::Dropout);
        assert_eq!(tape.dropout(x, 0.0, Mode::Train, &mut rng).unwrap(), x);
        assert_eq!(tape.dropout(x, 0.0, Mode::Eval, &mut rng).unwrap(), x);
        assert_eq!(tape.dropout(x, 0.5, Mode::Eval, &mut rng).unwrap(), x);
        assert!(matches!(tape.dropout(x, 1.0, Mode::Train, &mut rng), Err(Error::Config(_))));

        let a = tape.dropout(x, 0.5, Mode::Train, &mut stream(9, Stream::Dropout)).unwrap();
        let b = tape.dropout(x, 0.5, Mode::Train, &mut stream(9, Stream::Dropout)).unwrap();
        assert_eq!(tape.value(a).data(), tape.value(b).data());
        for (o, i) in tape.value(a).data().iter().zip(tape.value(x).data()) {
            assert!(*o == 0.0 || *o == 2.0 * i);
        }
    }

    #[test]
    fn gather_rejects_out_of_range() {
        let mut tape = Tape::new();
        let t = tape.param(Tensor::zeros(&[3, 2]));
        assert!(matches!(tape.gather_rows(t, vec![0, 3]), Err(Error::Encoding(_))));
    }
}
