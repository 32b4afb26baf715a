//! Mini-batch training for plain and distilled students.

mod optim;

pub use optim::{
    adam_step, clip_global_norm, early_stop, sgd_step, AdamState, OptimizerKind, StopDecision, ADAM_BETA1, ADAM_BETA2,
    ADAM_EPS,
};

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::EncodedDocument;
use crate::distillation::{batch_loss, DistillConfig, TransferSet};
use crate::error::{Error, Result};
use crate::evalbench::primary_metric;
use crate::models::{Batch, StudentModel};
use crate::rng::{stream, Stream};
use crate::tensor::{Mode, Tape};
use crate::TaskKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub patience: usize,
    pub seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    /// Global gradient-norm ceiling; 0 disables clipping.
    #[serde(default = "default_clip")]
    pub clip_norm: f64,
}

fn default_clip() -> f64 {
    5.0
}

impl TrainConfig {
    /// Batch 128 for multi-label and 64 for single-label data; Adam at 1e-3.
    pub fn for_kind(kind: TaskKind) -> Self {
        TrainConfig {
            batch_size: match kind {
                TaskKind::MultiLabel => 128,
                TaskKind::SingleLabel => 64,
            },
            learning_rate: 1e-3,
            epochs: 30,
            patience: 5,
            seed: 1,
            optimizer: OptimizerKind::Adam,
            clip_norm: default_clip(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if self.patience == 0 {
            return Err(Error::config("patience must be at least 1"));
        }
        if self.clip_norm < 0.0 {
            return Err(Error::config("clip_norm must be nonnegative"));
        }
        Ok(())
    }
}

/// One training example; `teacher` is present in distillation mode.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub doc: &'a EncodedDocument,
    pub teacher: Option<&'a [f64]>,
}

pub fn plain_examples(docs: &[EncodedDocument]) -> Vec<Example<'_>> {
    docs.iter().map(|doc| Example { doc, teacher: None }).collect()
}

pub fn transfer_examples(set: &TransferSet) -> Vec<Example<'_>> {
    set.records
        .iter()
        .map(|r| Example {
            doc: &r.doc,
            teacher: Some(&r.q),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Train,
    Distill,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_metric: f64,
}

/// Per-epoch history. Wall-clock times are kept out of the serialized form so
/// reruns produce identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub mode: TrainMode,
    pub metric: String,
    pub train_examples: usize,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_metric: f64,
    pub stopped_early: bool,
    #[serde(skip)]
    pub epoch_seconds: Vec<f64>,
}

impl TrainReport {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best validation epoch.
    pub model: StudentModel,
    pub report: TrainReport,
}

/// Trains `model` on `data`, selecting the epoch with the best validation
/// metric. With a teacher on every example the combined loss is used.
pub fn train_student(
    mut model: StudentModel,
    data: &[Example<'_>],
    val: &[EncodedDocument],
    loss: &DistillConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    loss.validate()?;
    let kind = model.config.kind;
    if loss.kind != kind {
        return Err(Error::config(format!("{} loss for a {} model", loss.kind, kind)));
    }
    if data.is_empty() {
        return Err(Error::EmptySequence("no training examples".into()));
    }
    if val.is_empty() {
        return Err(Error::EmptySequence("no validation documents".into()));
    }
    let all_docs = data.iter().map(|e| e.doc).chain(val);
    if let Some(bad) = all_docs.into_iter().find(|d| d.label.kind() != kind) {
        return Err(Error::config(format!("document {} is {}, model is {kind}", bad.id, bad.label.kind())));
    }
    let distill = data.iter().any(|e| e.teacher.is_some());
    if distill && data.iter().any(|e| e.teacher.is_none()) {
        return Err(Error::Distillation("every transfer example needs teacher probabilities".into()));
    }

    let mut shuffle_rng = stream(cfg.seed, Stream::Shuffle);
    let mut dropout_rng = stream(cfg.seed, Stream::Dropout);
    let trainable = trainable_mask(&model);
    let sizes: Vec<usize> = model
        .tensors()
        .iter()
        .zip(&trainable)
        .filter(|(_, &t)| t)
        .map(|(t, _)| t.numel())
        .collect();
    let mut adam = AdamState::new(&sizes);

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut records = Vec::new();
    let mut seconds = Vec::new();
    let mut history = Vec::new();
    let mut best: Option<(f64, StudentModel)> = None;
    let mut stopped_early = false;

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let mut weighted_loss = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let docs: Vec<&EncodedDocument> = chunk.iter().map(|&i| data[i].doc).collect();
            let targets: Vec<_> = docs.iter().map(|d| &d.label).collect();
            let teacher: Option<Vec<&[f64]>> = distill.then(|| chunk.iter().map(|&i| data[i].teacher.unwrap_or(&[])).collect());

            let mut tape = Tape::new();
            let batch = Batch::new(&docs, model.config.vocab_size)?;
            let fwd = model.forward(&mut tape, &batch, Mode::Train, &mut dropout_rng)?;
            let l = batch_loss(&mut tape, fwd.logits, &targets, teacher.as_deref(), loss)?;
            let value = tape.value(l).data()[0];
            if !value.is_finite() {
                return Err(Error::Divergence { epoch, batch: b });
            }
            weighted_loss += value * chunk.len() as f64;
            tape.backward(l)?;

            let mut grads: Vec<Vec<f64>> = fwd
                .params
                .iter()
                .zip(&trainable)
                .filter(|(_, &t)| t)
                .map(|(&v, _)| tape.grad(v).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; tape.value(v).numel()]))
                .collect();
            if grads.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch, batch: b });
            }
            if cfg.clip_norm > 0.0 {
                clip_global_norm(&mut grads, cfg.clip_norm);
            }
            let grad_refs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
            let mut params: Vec<&mut [f64]> = model
                .tensors_mut()
                .into_iter()
                .zip(&trainable)
                .filter(|(_, &t)| t)
                .map(|(t, _)| t.data_mut())
                .collect();
            match cfg.optimizer {
                OptimizerKind::Adam => adam_step(&mut params, &grad_refs, &mut adam, cfg.learning_rate)?,
                OptimizerKind::Sgd => sgd_step(&mut params, &grad_refs, cfg.learning_rate)?,
            }
            if model.config.embeddings_trainable {
                // Keep the padding row at zero.
                let e = model.config.embedding_dim;
                model.embedding.data_mut()[..e].iter_mut().for_each(|x| *x = 0.0);
            }
        }

        let probs = model.probabilities(val, 256)?;
        let metric = primary_metric(&probs, val, kind)?;
        history.push(metric);
        records.push(EpochRecord {
            epoch,
            train_loss: weighted_loss / data.len() as f64,
            val_metric: metric,
        });
        seconds.push(started.elapsed().as_secs_f64());
        if best.as_ref().is_none_or(|(m, _)| metric > *m) {
            best = Some((metric, model.clone()));
        }
        if early_stop(&history, cfg.patience).stop {
            stopped_early = epoch < cfg.epochs;
            break;
        }
    }

    let decision = early_stop(&history, cfg.patience);
    let (best_val_metric, best_model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model: best_model,
        report: TrainReport {
            mode: if distill { TrainMode::Distill } else { TrainMode::Train },
            metric: match kind {
                TaskKind::MultiLabel => "micro_f1".into(),
                TaskKind::SingleLabel => "accuracy".into(),
            },
            train_examples: data.len(),
            epochs: records,
            best_epoch: decision.best_epoch,
            best_val_metric,
            stopped_early,
            epoch_seconds: seconds,
        },
    })
}

fn trainable_mask(model: &StudentModel) -> [bool; 9] {
    let mut m = [true; 9];
    m[0] = model.config.embeddings_trainable;
    m
}
