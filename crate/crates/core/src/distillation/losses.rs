//! Classification and distillation losses, with closed-form gradients w.r.t.
//! the logits.
//!
//! Probabilities inside logarithms are clamped to `[KL_EPS, 1 − KL_EPS]` for
//! both arguments, so `KL(p, p)` is exactly zero; `0 · ln(0/·)` counts as 0.

use serde::{Deserialize, Serialize};

use crate::corpus::LabelTarget;
use crate::error::{Error, Result};
use crate::tensor::functional::{log_sigmoid, log_softmax, sigmoid};
use crate::tensor::{Tape, Var};
use crate::TaskKind;

pub const KL_EPS: f64 = 1e-7;

/// Which distribution comes first in the KL term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KlDirection {
    /// `KL(p_student ‖ q_teacher)`.
    #[default]
    StudentFirst,
    /// `KL(q_teacher ‖ p_student)`, the conventional distillation form.
    TeacherFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub lambda: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub kl_direction: KlDirection,
    pub kind: TaskKind,
}

fn default_temperature() -> f64 {
    1.0
}

impl DistillConfig {
    /// Shipped defaults: λ = 1 for multi-label, 4 for single-label; T = 1.
    pub fn for_kind(kind: TaskKind) -> Self {
        DistillConfig {
            lambda: match kind {
                TaskKind::MultiLabel => 1.0,
                TaskKind::SingleLabel => 4.0,
            },
            temperature: 1.0,
            kl_direction: KlDirection::StudentFirst,
            kind,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be a finite value >= 0, got {}", self.lambda)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::config(format!("temperature must be > 0, got {}", self.temperature)));
        }
        Ok(())
    }
}

fn clamp_log(lp: f64) -> f64 {
    lp.clamp(KL_EPS.ln(), (-KL_EPS).ln_1p())
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(KL_EPS, 1.0 - KL_EPS)
}

/// `−ln softmax(z)[class]`.
pub fn cross_entropy(logits: &[f64], class: usize) -> Result<f64> {
    Ok(cross_entropy_with_grad(logits, class)?.0)
}

pub fn cross_entropy_with_grad(logits: &[f64], class: usize) -> Result<(f64, Vec<f64>)> {
    if class >= logits.len() {
        return Err(Error::Label(format!("class {class} outside K={}", logits.len())));
    }
    let lp = log_softmax(logits)?;
    let mut grad: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
    grad[class] -= 1.0;
    Ok((-lp[class], grad))
}

/// Mean over classes of the sigmoid-fused binary cross-entropy.
pub fn binary_cross_entropy(logits: &[f64], targets: &[f64]) -> Result<f64> {
    Ok(binary_cross_entropy_with_grad(logits, targets)?.0)
}

pub fn binary_cross_entropy_with_grad(logits: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if logits.len() != targets.len() {
        return Err(Error::dim(format!("{} logits for {} targets", logits.len(), targets.len())));
    }
    if logits.is_empty() {
        return Err(Error::dim("binary cross-entropy over zero classes"));
    }
    if targets.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::Label("multi-hot targets must be 0 or 1".into()));
    }
    let k = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (&z, &y) in logits.iter().zip(targets) {
        loss -= y * log_sigmoid(z) + (1.0 - y) * log_sigmoid(-z);
        grad.push((sigmoid(z) - y) / k);
    }
    Ok((loss / k, grad))
}

/// `KL(p ‖ q)` on probabilities: categorical for single-label, a sum of
/// per-class Bernoulli divergences for multi-label.
pub fn kl_divergence(p: &[f64], q: &[f64], kind: TaskKind) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::dim(format!("KL between vectors of length {} and {}", p.len(), q.len())));
    }
    let in_unit = |v: &[f64]| v.iter().all(|x| (0.0..=1.0).contains(x));
    if !in_unit(p) || !in_unit(q) {
        return Err(Error::Validation("KL arguments must lie in [0, 1]".into()));
    }
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (clamp_prob(a).ln() - clamp_prob(b).ln()) };
    let kl = match kind {
        TaskKind::SingleLabel => {
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::Validation(format!("student distribution sums to {s}")));
            }
            p.iter().zip(q).map(|(&a, &b)| term(a, b)).sum::<f64>()
        }
        TaskKind::MultiLabel => p
            .iter()
            .zip(q)
            .map(|(&a, &b)| {
                let up = term(a, b);
                let down = if a == 1.0 {
                    0.0
                } else {
                    (1.0 - a) * ((1.0 - clamp_prob(a)).ln() - (1.0 - clamp_prob(b)).ln())
                };
                up + down
            })
            .sum(),
    };
    Ok(kl)
}

/// The distillation term on logits scaled by `1/T`, with its gradient.
pub fn distill_with_grad(logits: &[f64], q: &[f64], cfg: &DistillConfig) -> Result<(f64, Vec<f64>)> {
    if logits.len() != q.len() {
        return Err(Error::dim(format!("{} logits for {} teacher probabilities", logits.len(), q.len())));
    }
    let t = cfg.temperature;
    let u: Vec<f64> = logits.iter().map(|z| z / t).collect();
    match cfg.kind {
        TaskKind::SingleLabel => {
            let lp = log_softmax(&u)?;
            let p: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
            let lp_c: Vec<f64> = lp.iter().map(|&l| clamp_log(l)).collect();
            let in_range: Vec<f64> = lp.iter().zip(&lp_c).map(|(a, b)| if a == b { 1.0 } else { 0.0 }).collect();
            let lq: Vec<f64> = q.iter().map(|&v| clamp_prob(v).ln()).collect();
            match cfg.kl_direction {
                KlDirection::StudentFirst => {
                    let a: Vec<f64> = lp_c.iter().zip(&lq).map(|(x, y)| x - y).collect();
                    let value: f64 = p.iter().zip(&a).map(|(pi, ai)| pi * ai).sum();
                    let m: f64 = p.iter().zip(&in_range).map(|(pi, mi)| pi * mi).sum();
                    let grad = (0..p.len()).map(|i| p[i] * (a[i] - value + in_range[i] - m) / t).collect();
                    Ok((value, grad))
                }
                KlDirection::TeacherFirst => {
                    let value: f64 = q
                        .iter()
                        .zip(lq.iter().zip(&lp_c))
                        .map(|(&qi, (a, b))| if qi == 0.0 { 0.0 } else { qi * (a - b) })
                        .sum();
                    let qm: f64 = q.iter().zip(&in_range).map(|(qi, mi)| qi * mi).sum();
                    let grad = (0..p.len()).map(|i| (p[i] * qm - q[i] * in_range[i]) / t).collect();
                    Ok((value, grad))
                }
            }
        }
        TaskKind::MultiLabel => {
            let mut value = 0.0;
            let mut grad = Vec::with_capacity(u.len());
            for (&ui, &qi) in u.iter().zip(q) {
                let p = sigmoid(ui);
                let (lp, lnp) = (log_sigmoid(ui), log_sigmoid(-ui));
                let (lp_c, lnp_c) = (clamp_log(lp), clamp_log(lnp));
                let m = if lp == lp_c && lnp == lnp_c { 1.0 } else { 0.0 };
                let qc = clamp_prob(qi);
                let (lq, lnq) = (qc.ln(), (1.0 - qc).ln());
                match cfg.kl_direction {
                    KlDirection::StudentFirst => {
                        value += p * (lp_c - lq) + (1.0 - p) * (lnp_c - lnq);
                        grad.push(p * (1.0 - p) * ((lp_c - lnp_c) - (lq - lnq)) / t);
                    }
                    KlDirection::TeacherFirst => {
                        let up = if qi == 0.0 { 0.0 } else { qi * (lq - lp_c) };
                        let down = if qi == 1.0 { 0.0 } else { (1.0 - qi) * (lnq - lnp_c) };
                        value += up + down;
                        grad.push(m * (p - qi) / t);
                    }
                }
            }
            Ok((value, grad))
        }
    }
}

/// Classification loss for one example, matching the target's kind.
pub fn classification_with_grad(logits: &[f64], target: &LabelTarget) -> Result<(f64, Vec<f64>)> {
    match target {
        LabelTarget::Class(c) => cross_entropy_with_grad(logits, *c),
        LabelTarget::MultiHot(y) => binary_cross_entropy_with_grad(logits, y),
    }
}

/// `L_cls + λ · KL(student ‖ teacher)` for one example. With λ = 0 (or no
/// teacher) the distillation term is skipped entirely.
pub fn combined_loss_with_grad(
    logits: &[f64],
    target: &LabelTarget,
    q: Option<&[f64]>,
    cfg: &DistillConfig,
) -> Result<(f64, Vec<f64>)> {
    cfg.validate()?;
    if target.kind() != cfg.kind {
        return Err(Error::config(format!("{} target under a {} loss", target.kind(), cfg.kind)));
    }
    let (mut value, mut grad) = classification_with_grad(logits, target)?;
    if let Some(q) = q {
        if cfg.lambda != 0.0 {
            let (kl, kl_grad) = distill_with_grad(logits, q, cfg)?;
            value += cfg.lambda * kl;
            for (g, k) in grad.iter_mut().zip(kl_grad) {
                *g += cfg.lambda * k;
            }
        }
    }
    Ok((value, grad))
}

pub fn combined_loss(logits: &[f64], target: &LabelTarget, q: Option<&[f64]>, cfg: &DistillConfig) -> Result<f64> {
    Ok(combined_loss_with_grad(logits, target, q, cfg)?.0)
}

/// Batch-mean combined loss recorded on the tape as a single scalar node.
pub fn batch_loss(
    tape: &mut Tape,
    logits: Var,
    targets: &[&LabelTarget],
    teacher: Option<&[&[f64]]>,
    cfg: &DistillConfig,
) -> Result<Var> {
    let z = tape.value(logits);
    let (b, k) = (z.rows(), z.cols());
    if targets.len() != b || teacher.is_some_and(|q| q.len() != b) {
        return Err(Error::dim(format!("batch of {b} logits rows with {} targets", targets.len())));
    }
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(b * k);
    for (i, target) in targets.iter().enumerate() {
        let (v, g) = combined_loss_with_grad(z.row(i), target, teacher.map(|q| q[i]), cfg)?;
        total += v;
        grad.extend(g.into_iter().map(|x| x / b as f64));
    }
    tape.fused_scalar(logits, total / b as f64, grad)
}
