//! Losses (cross-entropy, binary cross-entropy, KL and the combined
//! distillation objective) and transfer-set construction.

mod augment;
mod losses;
mod transfer;

pub use augment::{augment_document, AugmentConfig, SwapTable};
pub use losses::{
    batch_loss, binary_cross_entropy, binary_cross_entropy_with_grad, classification_with_grad, combined_loss,
    combined_loss_with_grad, cross_entropy, cross_entropy_with_grad, distill_with_grad, kl_divergence, DistillConfig,
    KlDirection, KL_EPS,
};
pub use transfer::{build_transfer_set, Provenance, TransferRecord, TransferSet, SOFT_TARGET_FILE, TRANSFER_FILE};
