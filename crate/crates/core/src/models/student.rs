use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::infer::{self, DirectionView, WeightsView};
use crate::corpus::{EncodedDocument, Vocabulary, PAD_ID};
use crate::error::{Error, Result};
use crate::tensor::{lstm_step, Mode, Tape, Tensor, Var};
use crate::TaskKind;

/// Hidden sizes swept when relating parameter count to quality.
pub const HIDDEN_SWEEP: [usize; 5] = [32, 64, 128, 256, 512];

/// Architecture of the regularized single-layer BiLSTM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentConfig {
    pub vocab_size: usize,
    #[serde(default = "default_embedding_dim")]
    pub embedding_dim: usize,
    pub hidden_units: usize,
    pub num_classes: usize,
    pub kind: TaskKind,
    #[serde(default = "default_dropout")]
    pub embedding_dropout: f64,
    #[serde(default = "default_dropout")]
    pub output_dropout: f64,
    #[serde(default)]
    pub embeddings_trainable: bool,
    /// Recurrent weight dropping. Accepted for config compatibility; only 0 is supported.
    #[serde(default)]
    pub weight_drop: f64,
}

fn default_embedding_dim() -> usize {
    300
}

fn default_dropout() -> f64 {
    0.1
}

impl StudentConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("embedding_dim", self.embedding_dim),
            ("hidden_units", self.hidden_units),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if self.num_classes < 2 {
            return Err(Error::config(format!("num_classes must be at least 2, got {}", self.num_classes)));
        }
        for (name, r) in [("embedding_dropout", self.embedding_dropout), ("output_dropout", self.output_dropout)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::config(format!("{name} must lie in [0, 1), got {r}")));
            }
        }
        if self.weight_drop != 0.0 {
            return Err(Error::config("weight_drop is not implemented; set it to 0"));
        }
        Ok(())
    }
}

/// Closed-form parameter count:
///
/// ```text
/// [V·e]  +  2 directions · 4 gates · (e·h + h·h + h)  +  (2h·K + K)
/// ```
///
/// The embedding term is included only when `include_embeddings` is set.
pub fn count_parameters(config: &StudentConfig, include_embeddings: bool) -> Result<u64> {
    config.validate()?;
    let (v, e, h, k) = (
        config.vocab_size as u64,
        config.embedding_dim as u64,
        config.hidden_units as u64,
        config.num_classes as u64,
    );
    let embeddings = if include_embeddings { v * e } else { 0 };
    Ok(embeddings + 2 * 4 * (e * h + h * h + h) + (2 * h * k + k))
}

/// One direction of the BiLSTM. Gate blocks are (input, forget, cell, output).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `e × 4h`
    pub w_ih: Tensor,
    /// `h × 4h`
    pub w_hh: Tensor,
    /// `1 × 4h`
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentModel {
    pub config: StudentConfig,
    /// `V × e`; row 0 (padding) starts at zero.
    pub embedding: Tensor,
    pub forward_lstm: LstmParams,
    pub backward_lstm: LstmParams,
    /// `2h × K` (stored input-major so logits are `pooled · head_weight`).
    pub head_weight: Tensor,
    /// `1 × K`
    pub head_bias: Tensor,
}

/// Tape handles of one forward pass, in [`StudentModel::tensor_names`] order.
#[derive(Debug, Clone)]
pub struct ForwardVars {
    pub logits: Var,
    pub params: Vec<Var>,
}

/// Padded, time-major view of a batch.
#[derive(Debug, Clone)]
pub struct Batch {
    pub size: usize,
    pub steps: usize,
    /// Effective lengths (trailing padding stripped, minimum 1).
    pub lengths: Vec<usize>,
    /// Token id at `(t, b)` stored at `t·B + b`, reading left to right.
    pub forward_ids: Vec<usize>,
    /// Row permutation that reverses each document within its own length.
    pub reverse_rows: Vec<usize>,
}

impl Batch {
    pub fn new(docs: &[&EncodedDocument], vocab_size: usize) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptySequence("empty batch".into()));
        }
        let lengths: Vec<usize> = docs
            .iter()
            .map(|d| {
                let real = d.token_ids.iter().rposition(|&t| t != PAD_ID).map_or(0, |p| p + 1);
                real.max(1)
            })
            .collect();
        let b = docs.len();
        let t_max = *lengths.iter().max().expect("non-empty batch");
        let mut forward_ids = vec![PAD_ID as usize; t_max * b];
        for (row, doc) in docs.iter().enumerate() {
            for (t, &id) in doc.token_ids.iter().take(lengths[row]).enumerate() {
                if id as usize >= vocab_size {
                    return Err(Error::Encoding(format!(
                        "document {}: token id {id} outside a vocabulary of {vocab_size}",
                        doc.id
                    )));
                }
                forward_ids[t * b + row] = id as usize;
            }
        }
        let mut reverse_rows = Vec::with_capacity(t_max * b);
        for t in 0..t_max {
            for (row, &len) in lengths.iter().enumerate() {
                let src = if t < len { len - 1 - t } else { t };
                reverse_rows.push(src * b + row);
            }
        }
        Ok(Batch {
            size: b,
            steps: t_max,
            lengths,
            forward_ids,
            reverse_rows,
        })
    }
}

impl StudentModel {
    /// Random initialization: `U(-1/√h, 1/√h)` for recurrent and dense weights,
    /// `N(0, 0.1)` for embeddings, forget-gate bias 1, other biases 0.
    pub fn init<R: Rng + ?Sized>(config: StudentConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let (v, e, h, k) = (config.vocab_size, config.embedding_dim, config.hidden_units, config.num_classes);
        let bound = 1.0 / (h as f64).sqrt();
        let uni = Uniform::new_inclusive(-bound, bound);
        let normal = Normal::new(0.0, 0.1).expect("valid normal");

        let mut emb: Vec<f64> = (0..v * e).map(|_| normal.sample(rng)).collect();
        emb[..e].iter_mut().for_each(|x| *x = 0.0);
        let lstm = |rng: &mut R| -> LstmParams {
            let w_ih = (0..e * 4 * h).map(|_| uni.sample(rng)).collect();
            let w_hh = (0..h * 4 * h).map(|_| uni.sample(rng)).collect();
            let mut bias = vec![0.0; 4 * h];
            bias[h..2 * h].iter_mut().for_each(|b| *b = 1.0);
            LstmParams {
                w_ih: Tensor::from_parts(vec![e, 4 * h], w_ih),
                w_hh: Tensor::from_parts(vec![h, 4 * h], w_hh),
                bias: Tensor::from_parts(vec![1, 4 * h], bias),
            }
        };
        let forward_lstm = lstm(rng);
        let backward_lstm = lstm(rng);
        let head: Vec<f64> = (0..2 * h * k).map(|_| uni.sample(rng)).collect();
        Ok(StudentModel {
            embedding: Tensor::from_parts(vec![v, e], emb),
            forward_lstm,
            backward_lstm,
            head_weight: Tensor::from_parts(vec![2 * h, k], head),
            head_bias: Tensor::from_parts(vec![1, k], vec![0.0; k]),
            config,
        })
    }

    pub fn tensor_names() -> [&'static str; 9] {
        [
            "embedding",
            "lstm.forward.w_ih",
            "lstm.forward.w_hh",
            "lstm.forward.bias",
            "lstm.backward.w_ih",
            "lstm.backward.w_hh",
            "lstm.backward.bias",
            "head.weight",
            "head.bias",
        ]
    }

    pub fn tensors(&self) -> [&Tensor; 9] {
        [
            &self.embedding,
            &self.forward_lstm.w_ih,
            &self.forward_lstm.w_hh,
            &self.forward_lstm.bias,
            &self.backward_lstm.w_ih,
            &self.backward_lstm.w_hh,
            &self.backward_lstm.bias,
            &self.head_weight,
            &self.head_bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 9] {
        [
            &mut self.embedding,
            &mut self.forward_lstm.w_ih,
            &mut self.forward_lstm.w_hh,
            &mut self.forward_lstm.bias,
            &mut self.backward_lstm.w_ih,
            &mut self.backward_lstm.w_hh,
            &mut self.backward_lstm.bias,
            &mut self.head_weight,
            &mut self.head_bias,
        ]
    }

    /// Element count of every stored tensor, embeddings included.
    pub fn stored_parameters(&self) -> u64 {
        self.tensors().iter().map(|t| t.numel() as u64).sum()
    }

    /// Overwrites embedding rows from a word-vector text file
    /// (`token v1 … ve` per line). Returns how many vocabulary rows were set.
    pub fn load_word_vectors(&mut self, path: &Path, vocab: &Vocabulary) -> Result<usize> {
        let e = self.config.embedding_dim;
        let file = std::fs::File::open(path).map_err(|err| Error::io(path, err))?;
        let mut hits = 0;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|err| Error::io(path, err))?;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            if !vocab.contains(token) {
                continue;
            }
            let values: Vec<f64> = parts
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|err| Error::Data {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: err.to_string(),
                })?;
            if values.len() != e {
                return Err(Error::Data {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: format!("expected {e} values, found {}", values.len()),
                });
            }
            let row = vocab.id(token) as usize;
            self.embedding.data_mut()[row * e..(row + 1) * e].copy_from_slice(&values);
            hits += 1;
        }
        Ok(hits)
    }

    /// Registers parameters on `tape` and records the full forward pass:
    /// embedding lookup, embedding dropout, both LSTM directions, pad-masked
    /// max-over-time pooling, output dropout and the dense head.
    ///
    /// Pooling is column-wise, so pooling each direction separately and
    /// concatenating equals pooling the concatenated `T×2h` states.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        batch: &Batch,
        mode: Mode,
        rng: &mut R,
    ) -> Result<ForwardVars> {
        let cfg = &self.config;
        let emb = if cfg.embeddings_trainable {
            tape.param(self.embedding.clone())
        } else {
            tape.constant(self.embedding.clone())
        };
        let dirs = [&self.forward_lstm, &self.backward_lstm];
        let mut dir_vars = Vec::with_capacity(2);
        for d in dirs {
            dir_vars.push([tape.param(d.w_ih.clone()), tape.param(d.w_hh.clone()), tape.param(d.bias.clone())]);
        }
        let head_w = tape.param(self.head_weight.clone());
        let head_b = tape.param(self.head_bias.clone());

        let x = tape.gather_rows(emb, batch.forward_ids.clone())?;
        let x = tape.dropout(x, cfg.embedding_dropout, mode, rng)?;

        let (b, h) = (batch.size, cfg.hidden_units);
        let mut pooled = Vec::with_capacity(2);
        for (d, [w_ih, w_hh, bias]) in dir_vars.iter().enumerate() {
            let input = if d == 0 {
                x
            } else {
                tape.gather_rows(x, batch.reverse_rows.clone())?
            };
            let proj = tape.matmul(input, *w_ih)?;
            let proj = tape.add_row_bias(proj, *bias)?;
            let mut hs = tape.constant(Tensor::zeros(&[b, h]));
            let mut cs = tape.constant(Tensor::zeros(&[b, h]));
            let mut steps = Vec::with_capacity(batch.steps);
            for t in 0..batch.steps {
                let xp = tape.slice_rows(proj, t * b, (t + 1) * b)?;
                (hs, cs) = lstm_step(tape, xp, hs, cs, *w_hh)?;
                steps.push(hs);
            }
            pooled.push(tape.masked_max_over_time(&steps, &batch.lengths)?);
        }
        let features = tape.concat_cols(pooled[0], pooled[1])?;
        let features = tape.dropout(features, cfg.output_dropout, mode, rng)?;
        let logits = tape.matmul(features, head_w)?;
        let logits = tape.add_row_bias(logits, head_b)?;

        let [f, bw] = [dir_vars[0], dir_vars[1]];
        Ok(ForwardVars {
            logits,
            params: vec![emb, f[0], f[1], f[2], bw[0], bw[1], bw[2], head_w, head_b],
        })
    }

    pub(crate) fn view(&self) -> WeightsView<'_, f64> {
        fn dir(p: &LstmParams) -> DirectionView<'_, f64> {
            DirectionView {
                w_ih: p.w_ih.data(),
                w_hh: p.w_hh.data(),
                bias: p.bias.data(),
            }
        }
        WeightsView {
            vocab_size: self.config.vocab_size,
            embedding_dim: self.config.embedding_dim,
            hidden: self.config.hidden_units,
            classes: self.config.num_classes,
            embedding: self.embedding.data(),
            directions: [dir(&self.forward_lstm), dir(&self.backward_lstm)],
            head_weight: self.head_weight.data(),
            head_bias: self.head_bias.data(),
        }
    }

    /// Eval-mode logits without recording a tape, batched by `batch_size`.
    pub fn logits(&self, docs: &[EncodedDocument], batch_size: usize) -> Result<Vec<Vec<f64>>> {
        infer::logits(&self.view(), docs, batch_size)
    }

    /// Eval-mode class probabilities (sigmoid for multi-label, softmax otherwise).
    pub fn probabilities(&self, docs: &[EncodedDocument], batch_size: usize) -> Result<Vec<Vec<f64>>> {
        let logits = self.logits(docs, batch_size)?;
        Ok(logits.iter().map(|z| super::probabilities(z, self.config.kind)).collect())
    }
}
