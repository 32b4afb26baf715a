//! The BiLSTM student, the tf–idf logistic-regression baseline, teacher
//! sources and checkpoint serialization.

mod checkpoint;
pub mod infer;
mod logreg;
mod student;
mod teacher;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC};
pub use infer::StudentF32;
pub use logreg::{LogRegConfig, LogisticRegression};
pub use student::{count_parameters, Batch, ForwardVars, LstmParams, StudentConfig, StudentModel, HIDDEN_SWEEP};
pub use teacher::{validate_probs, SoftTargetHeader, SoftTargetRecord, SoftTargetStore, TeacherSource};

use crate::tensor::functional::{sigmoid, softmax};
use crate::TaskKind;

/// Reference parameter count of the large pretrained transformer baseline,
/// used only as the denominator of parameter ratios.
pub const BERT_BASE_PARAMETERS: u64 = 110_000_000;

/// Per-class probabilities: sigmoid for multi-label, softmax for single-label.
pub fn probabilities(logits: &[f64], kind: TaskKind) -> Vec<f64> {
    match kind {
        TaskKind::MultiLabel => logits.iter().map(|&z| sigmoid(z)).collect(),
        TaskKind::SingleLabel => softmax(logits).unwrap_or_default(),
    }
}
