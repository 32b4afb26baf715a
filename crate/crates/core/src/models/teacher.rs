//! Teacher soft targets: a file-backed store or an in-toolkit frozen model.
//!
//! Store format: JSON lines `{"id": "...", "probs": [K floats]}` plus a sidecar
//! `<store>.header.json` holding `{"label_space_hash", "kind", "K", "teacher_name"}`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::StudentModel;
use crate::corpus::{EncodedDocument, LabelSpace};
use crate::error::{Error, Result};
use crate::TaskKind;

/// Tolerance on the probability-simplex sum for single-label rows.
pub const SIMPLEX_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftTargetHeader {
    pub label_space_hash: String,
    pub kind: TaskKind,
    #[serde(rename = "K")]
    pub k: usize,
    pub teacher_name: String,
}

impl SoftTargetHeader {
    pub fn for_labels(labels: &LabelSpace, teacher_name: impl Into<String>) -> Self {
        SoftTargetHeader {
            label_space_hash: labels.hash(),
            kind: labels.kind(),
            k: labels.len(),
            teacher_name: teacher_name.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftTargetRecord {
    pub id: String,
    pub probs: Vec<f64>,
}

/// Checks one probability row: K finite entries in [0, 1], summing to 1
/// within [`SIMPLEX_TOL`] for single-label data.
pub fn validate_probs(probs: &[f64], kind: TaskKind, k: usize) -> Result<()> {
    if probs.len() != k {
        return Err(Error::Validation(format!("expected {k} probabilities, found {}", probs.len())));
    }
    if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
        return Err(Error::Validation(format!("probability {bad} outside [0, 1]")));
    }
    if kind == TaskKind::SingleLabel {
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Validation(format!("single-label probabilities sum to {sum}, not 1")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SoftTargetStore {
    header: SoftTargetHeader,
    records: Vec<SoftTargetRecord>,
    index: HashMap<String, usize>,
}

impl SoftTargetStore {
    pub fn header_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".header.json");
        PathBuf::from(s)
    }

    pub fn new(header: SoftTargetHeader, records: Vec<SoftTargetRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            validate_probs(&r.probs, header.kind, header.k)
                .map_err(|e| Error::Validation(format!("record {}: {e}", r.id)))?;
            if index.insert(r.id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate soft-target id {}", r.id)));
            }
        }
        Ok(SoftTargetStore { header, records, index })
    }

    pub fn header(&self) -> &SoftTargetHeader {
        &self.header
    }

    pub fn records(&self) -> &[SoftTargetRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&[f64]> {
        self.index
            .get(id)
            .map(|&i| self.records[i].probs.as_slice())
            .ok_or_else(|| Error::Distillation(format!("no soft targets for document {id}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let header_path = Self::header_path(path);
        std::fs::write(&header_path, serde_json::to_vec_pretty(&self.header)?).map_err(|e| Error::io(&header_path, e))?;
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Opens and fully validates a store. When `labels` is given, the sidecar
    /// must match its hash, kind and K.
    pub fn open(path: &Path, labels: Option<&LabelSpace>) -> Result<Self> {
        let header_path = Self::header_path(path);
        let text = std::fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
        let header: SoftTargetHeader = serde_json::from_str(&text)?;
        if let Some(ls) = labels {
            if header.label_space_hash != ls.hash() {
                return Err(Error::Validation(format!(
                    "soft-target label space hash {} does not match {}",
                    header.label_space_hash,
                    ls.hash()
                )));
            }
            if header.kind != ls.kind() || header.k != ls.len() {
                return Err(Error::Validation(format!(
                    "soft targets are {} with K={}, dataset is {} with K={}",
                    header.kind,
                    header.k,
                    ls.kind(),
                    ls.len()
                )));
            }
        }
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut records = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SoftTargetRecord = serde_json::from_str(&line).map_err(|e| Error::Data {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            validate_probs(&rec.probs, header.kind, header.k)
                .map_err(|e| Error::Validation(format!("{} line {}: {e}", path.display(), i + 1)))?;
            records.push(rec);
        }
        SoftTargetStore::new(header, records)
    }
}

/// Where soft targets come from.
#[derive(Debug, Clone)]
pub enum TeacherSource {
    /// Pre-computed probabilities keyed by document id.
    Store(SoftTargetStore),
    /// A frozen in-toolkit model scored on demand (can score augmented documents).
    Frozen { model: Box<StudentModel>, name: String },
}

impl TeacherSource {
    pub fn frozen(model: StudentModel, name: impl Into<String>) -> Self {
        TeacherSource::Frozen {
            model: Box::new(model),
            name: name.into(),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            TeacherSource::Store(s) => &s.header.teacher_name,
            TeacherSource::Frozen { name, .. } => name,
        }
    }

    pub fn kind(&self) -> TaskKind {
        match self {
            TeacherSource::Store(s) => s.header.kind,
            TeacherSource::Frozen { model, .. } => model.config.kind,
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            TeacherSource::Store(s) => s.header.k,
            TeacherSource::Frozen { model, .. } => model.config.num_classes,
        }
    }

    /// Whether documents absent from any store (e.g. fresh augmentations) can be scored.
    pub fn scores_new_documents(&self) -> bool {
        matches!(self, TeacherSource::Frozen { .. })
    }

    /// Teacher probabilities `q` for each document, validated row by row.
    pub fn predict(&self, docs: &[EncodedDocument]) -> Result<Vec<Vec<f64>>> {
        let (kind, k) = (self.kind(), self.num_classes());
        let rows = match self {
            TeacherSource::Store(store) => docs
                .iter()
                .map(|d| store.get(&d.id).map(<[f64]>::to_vec))
                .collect::<Result<Vec<_>>>()?,
            TeacherSource::Frozen { model, .. } => model.probabilities(docs, 128)?,
        };
        for (d, q) in docs.iter().zip(&rows) {
            validate_probs(q, kind, k).map_err(|e| Error::Validation(format!("teacher output for {}: {e}", d.id)))?;
        }
        Ok(rows)
    }
}
