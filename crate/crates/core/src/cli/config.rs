//! Run configuration: kind-dependent defaults, a JSON config file and
//! dot-notation command-line overrides, merged in that order.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::distillation::{AugmentConfig, DistillConfig, KlDirection};
use crate::error::{Error, Result};
use crate::evalbench::BenchConfig;
use crate::models::{StudentConfig, HIDDEN_SWEEP};
use crate::training::{OptimizerKind, TrainConfig};
use crate::TaskKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub min_count: u64,
    pub msl: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub embedding_dim: usize,
    pub hidden_units: usize,
    pub embedding_dropout: f64,
    pub output_dropout: f64,
    pub embeddings_trainable: bool,
    /// Optional GloVe-style text file (`word v1 v2 ...` per line).
    pub word_vectors: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeacherSection {
    pub name: String,
    pub hidden_units: usize,
    /// Frozen in-toolkit teacher checkpoint.
    pub checkpoint: Option<PathBuf>,
    /// Externally exported soft-target store.
    pub soft_targets: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistillSection {
    pub lambda: f64,
    pub temperature: f64,
    pub kl_direction: KlDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentSection {
    pub mask_prob: f64,
    pub swap_prob: f64,
    pub multiplier: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub patience: usize,
    pub optimizer: OptimizerKind,
    pub clip_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Train,
    Distill,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub mode: SweepMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: TaskKind,
    pub seed: u64,
    pub data_dir: Option<PathBuf>,
    pub corpus: CorpusSection,
    pub model: ModelSection,
    pub teacher: TeacherSection,
    pub distill: DistillSection,
    pub augment: AugmentSection,
    pub train: TrainSection,
    pub bench: BenchConfig,
    pub sweep: SweepSection,
}

impl RunConfig {
    pub fn defaults(task: TaskKind) -> Self {
        let d = DistillConfig::for_kind(task);
        let t = TrainConfig::for_kind(task);
        let a = AugmentConfig::default();
        RunConfig {
            task,
            seed: 1,
            data_dir: None,
            corpus: CorpusSection { min_count: 1, msl: None },
            model: ModelSection {
                embedding_dim: 300,
                hidden_units: 256,
                embedding_dropout: 0.1,
                output_dropout: 0.1,
                embeddings_trainable: false,
                word_vectors: None,
            },
            teacher: TeacherSection {
                name: "bilstm-teacher".into(),
                hidden_units: 512,
                checkpoint: None,
                soft_targets: None,
            },
            distill: DistillSection {
                lambda: d.lambda,
                temperature: d.temperature,
                kl_direction: d.kl_direction,
            },
            augment: AugmentSection {
                mask_prob: a.mask_prob,
                swap_prob: a.swap_prob,
                multiplier: a.multiplier,
            },
            train: TrainSection {
                batch_size: t.batch_size,
                learning_rate: t.learning_rate,
                epochs: t.epochs,
                patience: t.patience,
                optimizer: t.optimizer,
                clip_norm: t.clip_norm,
            },
            bench: BenchConfig::default(),
            sweep: SweepSection {
                sizes: HIDDEN_SWEEP.to_vec(),
                seeds: (1..=5).collect(),
                mode: SweepMode::Train,
            },
        }
    }

    /// Defaults for the resolved task, overlaid with `file` and then `overrides`.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, Value)]) -> Result<Self> {
        let mut user = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let v: Value = serde_json::from_str(&text)
                    .map_err(|e| Error::config(format!("{}: {e}", p.display())))?;
                if !v.is_object() {
                    return Err(Error::config(format!("{}: config must be a JSON object", p.display())));
                }
                v
            }
            None => Value::Object(Map::new()),
        };
        for (key, value) in overrides {
            set_path(&mut user, key, value.clone())?;
        }
        let task = match user.get("task") {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::config(format!("task: {e}")))?,
            None => TaskKind::MultiLabel,
        };
        let mut merged = serde_json::to_value(RunConfig::defaults(task))?;
        merge(&mut merged, user);
        let cfg: RunConfig = serde_json::from_value(merged).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.distill_config().validate()?;
        self.augment_config().validate()?;
        self.train_config(self.seed).validate()?;
        self.bench.validate()?;
        if self.model.hidden_units == 0 || self.teacher.hidden_units == 0 || self.model.embedding_dim == 0 {
            return Err(Error::config("hidden_units and embedding_dim must be positive"));
        }
        if self.corpus.msl == Some(0) {
            return Err(Error::config("corpus.msl must be at least 1"));
        }
        if self.sweep.sizes.is_empty() || self.sweep.seeds.is_empty() {
            return Err(Error::config("sweep.sizes and sweep.seeds must be non-empty"));
        }
        Ok(())
    }

    pub fn distill_config(&self) -> DistillConfig {
        DistillConfig {
            lambda: self.distill.lambda,
            temperature: self.distill.temperature,
            kl_direction: self.distill.kl_direction,
            kind: self.task,
        }
    }

    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig {
            mask_prob: self.augment.mask_prob,
            swap_prob: self.augment.swap_prob,
            multiplier: self.augment.multiplier,
            seed: self.seed,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.train.batch_size,
            learning_rate: self.train.learning_rate,
            epochs: self.train.epochs,
            patience: self.train.patience,
            seed,
            optimizer: self.train.optimizer,
            clip_norm: self.train.clip_norm,
        }
    }

    pub fn student_config(&self, vocab_size: usize, num_classes: usize, hidden_units: usize) -> StudentConfig {
        StudentConfig {
            vocab_size,
            embedding_dim: self.model.embedding_dim,
            hidden_units,
            num_classes,
            kind: self.task,
            embedding_dropout: self.model.embedding_dropout,
            output_dropout: self.model.output_dropout,
            embeddings_trainable: self.model.embeddings_trainable,
            weight_drop: 0.0,
        }
    }
}

/// Recursively overlays `patch` onto `base`; objects merge, everything else replaces.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(root: &mut Value, dotted: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = dotted.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(format!("malformed override key {dotted:?}")));
    }
    for part in &parts[..parts.len() - 1] {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::config(format!("override {dotted:?} descends into a non-object")))?;
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    let obj = cur
        .as_object_mut()
        .ok_or_else(|| Error::config(format!("override {dotted:?} descends into a non-object")))?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Dot-notation overrides in command-line order.
pub type Overrides = Vec<(String, Value)>;

/// Parses an override value: JSON literal if it parses, string otherwise.
pub fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Splits `--section.key value` and `--section.key=value` pairs out of `args`.
pub fn extract_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--").filter(|f| f.split('=').next().is_some_and(|k| k.contains('.'))) else {
            rest.push(arg);
            continue;
        };
        let (key, raw) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::config(format!("override --{flag} needs a value")))?;
                (flag.to_string(), v)
            }
        };
        overrides.push((key, parse_value(&raw)));
    }
    Ok((rest, overrides))
}
