//! Inference latency: median wall-clock of full passes over a split, after warmup.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::EncodedDocument;
use crate::error::{Error, Result};
use crate::models::{count_parameters, StudentF32, StudentModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub batch_size: usize,
    /// Batches scored before timing starts.
    pub warmup_batches: usize,
    pub repetitions: usize,
    pub precision: Precision,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            batch_size: 128,
            warmup_batches: 3,
            repetitions: 5,
            precision: Precision::F64,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.repetitions == 0 {
            return Err(Error::config("bench batch_size and repetitions must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub model: String,
    pub params_excl_emb: u64,
    pub params_incl_emb: u64,
    pub batch_size: usize,
    pub documents: usize,
    pub precision: Precision,
    /// Median seconds for one pass over the split.
    pub seconds: f64,
    pub reference: String,
    /// Reference seconds / this model's seconds.
    pub speedup: f64,
    pub hardware: String,
}

pub const BENCH_CSV_HEADER: &str =
    "model,params_excl_emb,params_incl_emb,batch_size,documents,precision,seconds,reference,speedup,hardware";

/// CPU model name from `/proc/cpuinfo` when available, plus the architecture.
pub fn hardware_descriptor() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo").ok().and_then(|s| {
        s.lines()
            .find(|l| l.starts_with("model name"))
            .and_then(|l| l.split(':').nth(1))
            .map(|v| v.trim().to_string())
    });
    format!(
        "{} ({}, 1 thread)",
        cpu.unwrap_or_else(|| "unknown cpu".into()),
        std::env::consts::ARCH
    )
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Times `model` on `docs` on the calling thread.
pub fn bench_latency(name: &str, model: &StudentModel, docs: &[EncodedDocument], cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    if docs.is_empty() {
        return Err(Error::Bench("cannot benchmark on an empty split".into()));
    }
    let f32_model = (cfg.precision == Precision::F32).then(|| StudentF32::from_model(model));
    let run = |d: &[EncodedDocument]| -> Result<Vec<Vec<f64>>> {
        match &f32_model {
            Some(m) => m.logits(d, cfg.batch_size),
            None => model.logits(d, cfg.batch_size),
        }
    };
    for chunk in docs.chunks(cfg.batch_size).take(cfg.warmup_batches) {
        black_box(run(chunk)?);
    }
    let mut times = Vec::with_capacity(cfg.repetitions);
    for _ in 0..cfg.repetitions {
        let start = Instant::now();
        black_box(run(black_box(docs))?);
        times.push(start.elapsed().as_secs_f64());
    }
    let seconds = median(times).max(f64::MIN_POSITIVE);
    Ok(BenchReport {
        model: name.to_string(),
        params_excl_emb: count_parameters(&model.config, false)?,
        params_incl_emb: count_parameters(&model.config, true)?,
        batch_size: cfg.batch_size,
        documents: docs.len(),
        precision: cfg.precision,
        seconds,
        reference: name.to_string(),
        speedup: 1.0,
        hardware: hardware_descriptor(),
    })
}

/// Benchmarks every model; speedups are relative to the first.
pub fn bench_models(models: &[(String, StudentModel)], docs: &[EncodedDocument], cfg: &BenchConfig) -> Result<Vec<BenchReport>> {
    let mut reports = models
        .iter()
        .map(|(name, m)| bench_latency(name, m, docs, cfg))
        .collect::<Result<Vec<_>>>()?;
    if let Some(first) = reports.first().cloned() {
        for r in &mut reports {
            r.reference = first.model.clone();
            r.speedup = first.seconds / r.seconds;
        }
    }
    Ok(reports)
}

pub fn bench_csv(reports: &[BenchReport]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let precision = match r.precision {
            Precision::F64 => "f64",
            Precision::F32 => "f32",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6},{},{:.4},\"{}\"\n",
            r.model,
            r.params_excl_emb,
            r.params_incl_emb,
            r.batch_size,
            r.documents,
            precision,
            r.seconds,
            r.reference,
            r.speedup,
            r.hardware.replace('"', "'")
        ));
    }
    out
}
