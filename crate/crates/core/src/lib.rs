//! Knowledge distillation toolkit for document classification.
//!
//! A large frozen teacher (an in-toolkit BiLSTM, or soft targets exported by any
//! external model) is distilled into a small regularized single-layer BiLSTM
//! student. The training objective combines the classification loss with a
//! weighted KL term against the teacher's class probabilities:
//!
//! ```text
//! L = L_classification + lambda * KL(p_student || q_teacher)
//! ```
//!
//! Modules, bottom-up:
//!
//! - [`tensor`]: dense f64 tensors and a record-then-reverse autodiff tape.
//! - [`corpus`]: JSON-lines ingestion, tokenization, vocabulary, tf-idf, corpus statistics.
//! - [`models`]: the BiLSTM student, the logistic-regression baseline, teacher sources, checkpoints.
//! - [`distillation`]: classification and distillation losses, transfer-set augmentation.
//! - [`training`]: seeded mini-batch training with Adam, clipping and early stopping.
//! - [`evalbench`]: micro-F1/accuracy, latency benchmarking, hidden-size sweeps.
//! - [`cli`]: the `docdistill` command-line pipeline.

pub mod cli;
pub mod corpus;
pub mod distillation;
pub mod error;
pub mod evalbench;
pub mod models;
pub mod rng;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};

/// Classification regime of a dataset and every model trained on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    MultiLabel,
    SingleLabel,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::MultiLabel => "multi-label",
            TaskKind::SingleLabel => "single-label",
        }
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multi-label" => Ok(TaskKind::MultiLabel),
            "single-label" => Ok(TaskKind::SingleLabel),
            other => Err(Error::config(format!(
                "unknown task kind {other:?} (expected multi-label or single-label)"
            ))),
        }
    }
}
