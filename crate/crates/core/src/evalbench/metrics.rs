use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedDocument, LabelSpace, LabelTarget};
use crate::error::{Error, Result};
use crate::tensor::functional::argmax;
use crate::TaskKind;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Pooled true positives, false positives and false negatives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    /// `2TP / (2TP + FP + FN)`, 0 when the denominator is 0.
    pub fn f1(&self) -> f64 {
        let d = 2 * self.tp + self.fp + self.fn_;
        if d == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / d as f64
        }
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn check_shapes(pred: &[Vec<bool>], gold: &[Vec<bool>]) -> Result<usize> {
    if pred.len() != gold.len() {
        return Err(Error::dim(format!("{} prediction rows vs {} gold rows", pred.len(), gold.len())));
    }
    let k = gold.first().map_or(0, Vec::len);
    if pred.iter().chain(gold).any(|r| r.len() != k) {
        return Err(Error::dim("prediction and gold rows must all have the same number of classes"));
    }
    Ok(k)
}

/// Per-class counts.
pub fn class_counts(pred: &[Vec<bool>], gold: &[Vec<bool>]) -> Result<Vec<Counts>> {
    let k = check_shapes(pred, gold)?;
    let mut counts = vec![Counts::default(); k];
    for (p, g) in pred.iter().zip(gold) {
        for (c, (&pi, &gi)) in counts.iter_mut().zip(p.iter().zip(g)) {
            match (pi, gi) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(counts)
}

/// F1 over TP/FP/FN pooled across every (document, class) pair.
pub fn micro_f1(pred: &[Vec<bool>], gold: &[Vec<bool>]) -> Result<f64> {
    let pooled = class_counts(pred, gold)?.into_iter().fold(Counts::default(), |a, c| Counts {
        tp: a.tp + c.tp,
        fp: a.fp + c.fp,
        fn_: a.fn_ + c.fn_,
    });
    Ok(pooled.f1())
}

/// Unweighted mean of per-class F1.
pub fn macro_f1(pred: &[Vec<bool>], gold: &[Vec<bool>]) -> Result<f64> {
    let counts = class_counts(pred, gold)?;
    if counts.is_empty() {
        return Ok(0.0);
    }
    Ok(counts.iter().map(Counts::f1).sum::<f64>() / counts.len() as f64)
}

/// Positive iff probability ≥ threshold.
pub fn threshold_predictions(probs: &[Vec<f64>], threshold: f64) -> Result<Vec<Vec<bool>>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::config(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    Ok(probs.iter().map(|r| r.iter().map(|&p| p >= threshold).collect()).collect())
}

pub fn accuracy(pred: &[usize], gold: &[usize]) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(Error::dim(format!("{} predictions vs {} gold labels", pred.len(), gold.len())));
    }
    if gold.is_empty() {
        return Ok(0.0);
    }
    let hits = pred.iter().zip(gold).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / gold.len() as f64)
}

pub fn gold_multi_hot(docs: &[EncodedDocument]) -> Result<Vec<Vec<bool>>> {
    docs.iter()
        .map(|d| match &d.label {
            LabelTarget::MultiHot(v) => Ok(v.iter().map(|&x| x == 1.0).collect()),
            LabelTarget::Class(_) => Err(Error::Label(format!("document {} is single-label", d.id))),
        })
        .collect()
}

pub fn gold_classes(docs: &[EncodedDocument]) -> Result<Vec<usize>> {
    docs.iter()
        .map(|d| match &d.label {
            LabelTarget::Class(c) => Ok(*c),
            LabelTarget::MultiHot(_) => Err(Error::Label(format!("document {} is multi-label", d.id))),
        })
        .collect()
}

/// The model-selection metric: micro-F1 at 0.5 (multi-label) or accuracy.
pub fn primary_metric(probs: &[Vec<f64>], docs: &[EncodedDocument], kind: TaskKind) -> Result<f64> {
    match kind {
        TaskKind::MultiLabel => micro_f1(&threshold_predictions(probs, DEFAULT_THRESHOLD)?, &gold_multi_hot(docs)?),
        TaskKind::SingleLabel => {
            let pred: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
            accuracy(&pred, &gold_classes(docs)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub value: f64,
    pub split: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_f1: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_class: Vec<ClassScore>,
}

impl MetricReport {
    pub fn compute(
        probs: &[Vec<f64>],
        docs: &[EncodedDocument],
        labels: &LabelSpace,
        split: &str,
        seed: u64,
    ) -> Result<Self> {
        let value = primary_metric(probs, docs, labels.kind())?;
        match labels.kind() {
            TaskKind::SingleLabel => Ok(MetricReport {
                metric: "accuracy".into(),
                value,
                split: split.into(),
                seed,
                threshold: None,
                macro_f1: None,
                per_class: Vec::new(),
            }),
            TaskKind::MultiLabel => {
                let pred = threshold_predictions(probs, DEFAULT_THRESHOLD)?;
                let gold = gold_multi_hot(docs)?;
                let per_class = class_counts(&pred, &gold)?
                    .iter()
                    .zip(labels.labels())
                    .map(|(c, l)| ClassScore {
                        label: l.clone(),
                        precision: c.precision(),
                        recall: c.recall(),
                        f1: c.f1(),
                    })
                    .collect();
                Ok(MetricReport {
                    metric: "micro_f1".into(),
                    value,
                    split: split.into(),
                    seed,
                    threshold: Some(DEFAULT_THRESHOLD),
                    macro_f1: Some(macro_f1(&pred, &gold)?),
                    per_class,
                })
            }
        }
    }
}
