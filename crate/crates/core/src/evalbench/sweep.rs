//! Parameter count versus validation quality across hidden sizes.

use serde::{Deserialize, Serialize};

use crate::corpus::EncodedDocument;
use crate::distillation::DistillConfig;
use crate::error::{Error, Result};
use crate::models::{count_parameters, StudentModel};
use crate::training::{train_student, Example, TrainConfig};

pub const SWEEP_CSV_HEADER: &str = "hidden_units,params_excl_emb,params_incl_emb,metric_mean,metric_std";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub hidden_units: usize,
    pub params_excl_emb: u64,
    pub params_incl_emb: u64,
    pub metric_mean: f64,
    /// Sample standard deviation over seeds (0 for a single seed).
    pub metric_std: f64,
    pub metrics: Vec<f64>,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Trains one student per (hidden size, seed) with otherwise identical
/// settings. `make_model(hidden, seed)` builds the initial model.
pub fn sweep_hidden_sizes(
    sizes: &[usize],
    seeds: &[u64],
    mut make_model: impl FnMut(usize, u64) -> Result<StudentModel>,
    data: &[Example<'_>],
    val: &[EncodedDocument],
    loss: &DistillConfig,
    train: &TrainConfig,
) -> Result<Vec<SweepRow>> {
    if sizes.is_empty() || seeds.is_empty() {
        return Err(Error::config("a sweep needs at least one hidden size and one seed"));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &h in sizes {
        let mut metrics = Vec::with_capacity(seeds.len());
        let mut config = None;
        for &seed in seeds {
            let model = make_model(h, seed)?;
            config = Some(model.config.clone());
            let cfg = TrainConfig {
                seed,
                ..train.clone()
            };
            metrics.push(train_student(model, data, val, loss, &cfg)?.report.best_val_metric);
        }
        let config = config.expect("at least one seed");
        let (metric_mean, metric_std) = mean_std(&metrics);
        rows.push(SweepRow {
            hidden_units: h,
            params_excl_emb: count_parameters(&config, false)?,
            params_incl_emb: count_parameters(&config, true)?,
            metric_mean,
            metric_std,
            metrics,
        });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6}\n",
            r.hidden_units, r.params_excl_emb, r.params_incl_emb, r.metric_mean, r.metric_std
        ));
    }
    out
}
