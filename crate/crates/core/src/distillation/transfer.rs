//! Transfer sets: the (possibly augmented) documents distillation runs over,
//! each paired with teacher probabilities.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::augment::{augment_document, AugmentConfig, SwapTable};
use crate::corpus::{read_documents, write_documents, EncodedDocument, Encoder};
use crate::error::{Error, Result};
use crate::models::{SoftTargetHeader, SoftTargetRecord, SoftTargetStore, TeacherSource};
use crate::rng::{substream, Stream};

pub const TRANSFER_FILE: &str = "transfer.jsonl";
pub const SOFT_TARGET_FILE: &str = "transfer.soft.jsonl";
const AUG_MARKER: &str = "#aug";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Original,
    Augmented,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRecord {
    pub doc: EncodedDocument,
    pub q: Vec<f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferSet {
    pub records: Vec<TransferRecord>,
    pub teacher_name: String,
}

impl TransferSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn augmented(&self) -> usize {
        self.records.iter().filter(|r| r.provenance == Provenance::Augmented).count()
    }

    /// Writes `transfer.jsonl` (a loadable corpus split) and the parallel
    /// soft-target store into `dir`; returns the corpus path.
    pub fn write(&self, dir: &Path, encoder: &Encoder) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let docs = self
            .records
            .iter()
            .map(|r| encoder.decode(&r.doc))
            .collect::<Result<Vec<_>>>()?;
        let corpus = dir.join(TRANSFER_FILE);
        write_documents(&corpus, &docs)?;
        let records = self
            .records
            .iter()
            .map(|r| SoftTargetRecord {
                id: r.doc.id.clone(),
                probs: r.q.clone(),
            })
            .collect();
        let header = SoftTargetHeader::for_labels(&encoder.labels, self.teacher_name.clone());
        SoftTargetStore::new(header, records)?.write(&dir.join(SOFT_TARGET_FILE))?;
        Ok(corpus)
    }

    /// Reads a directory produced by [`TransferSet::write`].
    pub fn load(dir: &Path, encoder: &Encoder) -> Result<Self> {
        let raw = read_documents(&dir.join(TRANSFER_FILE))?;
        let store = SoftTargetStore::open(&dir.join(SOFT_TARGET_FILE), Some(&encoder.labels))?;
        let records = raw
            .iter()
            .map(|d| {
                let doc = encoder.encode(d)?;
                let q = store.get(&doc.id)?.to_vec();
                let provenance = if doc.id.contains(AUG_MARKER) {
                    Provenance::Augmented
                } else {
                    Provenance::Original
                };
                Ok(TransferRecord { doc, q, provenance })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TransferSet {
            records,
            teacher_name: store.header().teacher_name.clone(),
        })
    }
}

/// Originals plus `multiplier − 1` augmented copies of each training document,
/// all scored by the teacher. Copy `k` of document `i` uses the augmentation
/// substream `i`, so output does not depend on processing order.
pub fn build_transfer_set(
    train: &[EncodedDocument],
    table: &SwapTable,
    teacher: &TeacherSource,
    config: &AugmentConfig,
) -> Result<TransferSet> {
    config.validate()?;
    if config.multiplier > 1 && !teacher.scores_new_documents() {
        return Err(Error::Distillation(format!(
            "a file-backed teacher cannot score augmented documents (multiplier {}); use an in-toolkit teacher",
            config.multiplier
        )));
    }
    let mut docs = Vec::with_capacity(train.len() * config.multiplier);
    let mut provenance = Vec::with_capacity(docs.capacity());
    for (i, doc) in train.iter().enumerate() {
        docs.push(doc.clone());
        provenance.push(Provenance::Original);
        let mut rng = substream(config.seed, Stream::Augment, i as u64);
        for copy in 1..config.multiplier {
            docs.push(augment_document(doc, table, config, copy, &mut rng));
            provenance.push(Provenance::Augmented);
        }
    }
    let q = teacher.predict(&docs)?;
    Ok(TransferSet {
        records: docs
            .into_iter()
            .zip(q)
            .zip(provenance)
            .map(|((doc, q), provenance)| TransferRecord { doc, q, provenance })
            .collect(),
        teacher_name: teacher.name().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{RawDocument, Vocabulary};
    use crate::models::{StudentConfig, StudentModel};
    use crate::rng::stream;
    use crate::TaskKind;

    fn setup(n: usize) -> (Encoder, Vec<EncodedDocument>, TeacherSource) {
        let raw: Vec<RawDocument> = (0..n)
            .map(|i| RawDocument {
                id: format!("doc{i}"),
                text: format!("word{} shared text here , and w{}", i % 7, i % 3),
                labels: vec![if i % 2 == 0 { "x" } else { "y" }.to_string()],
                pos_tags: None,
            })
            .collect();
        let enc = Encoder::fit(&raw, TaskKind::SingleLabel, 1, None).unwrap();
        let docs = enc.encode_all(&raw).unwrap();
        let cfg = StudentConfig {
            vocab_size: enc.vocab.len(),
            embedding_dim: 4,
            hidden_units: 5,
            num_classes: 2,
            kind: TaskKind::SingleLabel,
            embedding_dropout: 0.0,
            output_dropout: 0.0,
            embeddings_trainable: false,
            weight_drop: 0.0,
        };
        let teacher = TeacherSource::frozen(StudentModel::init(cfg, &mut stream(1, Stream::Teacher)).unwrap(), "t");
        (enc, docs, teacher)
    }

    fn table(docs: &[EncodedDocument], vocab: &Vocabulary) -> SwapTable {
        SwapTable::build(docs, vocab)
    }

    #[test]
    fn multiplier_sizes() {
        let (enc, docs, teacher) = setup(100);
        let t = table(&docs, &enc.vocab);
        for m in [1, 3, 4] {
            let cfg = AugmentConfig {
                multiplier: m,
                ..Default::default()
            };
            let ts = build_transfer_set(&docs, &t, &teacher, &cfg).unwrap();
            assert_eq!(ts.len(), m * 100);
            assert_eq!(ts.augmented(), (m - 1) * 100);
        }
    }

    #[test]
    fn augmented_records_keep_source_labels_and_are_deterministic() {
        let (enc, docs, teacher) = setup(20);
        let t = table(&docs, &enc.vocab);
        let cfg = AugmentConfig {
            multiplier: 3,
            ..Default::default()
        };
        let a = build_transfer_set(&docs, &t, &teacher, &cfg).unwrap();
        let b = build_transfer_set(&docs, &t, &teacher, &cfg).unwrap();
        assert_eq!(a, b);
        for r in &a.records {
            let src = r.doc.id.split(AUG_MARKER).next().unwrap();
            let orig = docs.iter().find(|d| d.id == src).unwrap();
            assert_eq!(r.doc.label, orig.label);
            assert_eq!(r.doc.token_ids.len(), orig.token_ids.len());
        }
    }

    #[test]
    fn file_teacher_cannot_augment() {
        let (enc, docs, teacher) = setup(4);
        let q = teacher.predict(&docs).unwrap();
        let store = SoftTargetStore::new(
            SoftTargetHeader::for_labels(&enc.labels, "file"),
            docs.iter()
                .zip(q)
                .map(|(d, probs)| SoftTargetRecord { id: d.id.clone(), probs })
                .collect(),
        )
        .unwrap();
        let file = TeacherSource::Store(store);
        let t = table(&docs, &enc.vocab);
        let one = build_transfer_set(&docs, &t, &file, &AugmentConfig::default()).unwrap();
        assert_eq!(one.len(), 4);
        let three = AugmentConfig {
            multiplier: 3,
            ..Default::default()
        };
        assert!(matches!(build_transfer_set(&docs, &t, &file, &three), Err(Error::Distillation(_))));
    }

    #[test]
    fn write_then_load_round_trips() {
        let (enc, docs, teacher) = setup(10);
        let t = table(&docs, &enc.vocab);
        let cfg = AugmentConfig {
            multiplier: 2,
            ..Default::default()
        };
        let ts = build_transfer_set(&docs, &t, &teacher, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ts.write(dir.path(), &enc).unwrap();
        let back = TransferSet::load(dir.path(), &enc).unwrap();
        assert_eq!(back.len(), ts.len());
        assert_eq!(back.augmented(), 10);
        for (a, b) in back.records.iter().zip(&ts.records) {
            assert_eq!(a.doc.token_ids, b.doc.token_ids);
            assert_eq!(a.q, b.q);
        }
    }
}
