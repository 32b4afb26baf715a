//! Dataset ingestion and featurization.
//!
//! Datasets are directories of JSON-lines files (`train.jsonl`, `val.jsonl`,
//! `test.jsonl`), one record per line:
//!
//! ```json
//! {"id": "d1", "text": "Oil prices rose.", "labels": ["crude"], "pos": ["NOUN", "NOUN", "VERB", "PUNCT"]}
//! ```
//!
//! `pos` is optional and, when present, aligned with the output of
//! [`tokenize`]. Vocabulary, label space and idf statistics are always fit on
//! the training split alone.

mod io;
mod stats;
mod tfidf;
mod tokenize;
mod vocab;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use io::{read_documents, write_documents, FixtureManifest, SplitStatsEntry};
pub use stats::{corpus_stats, CorpusStats};
pub use tfidf::{SparseMatrix, SparseRow, TfidfVectorizer};
pub use tokenize::{count_sentences, is_word, tokenize, truncate, MASK, PAD, UNK};
pub use vocab::{Vocabulary, MASK_ID, NUM_SPECIALS, PAD_ID, UNK_ID};

use crate::error::{Error, Result};
use crate::TaskKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    pub labels: Vec<String>,
    #[serde(rename = "pos", default, skip_serializing_if = "Option::is_none")]
    pub pos_tags: Option<Vec<String>>,
}

/// Ordered label names plus the dataset regime.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    labels: Vec<String>,
    kind: TaskKind,
}

impl LabelSpace {
    pub fn new(labels: Vec<String>, kind: TaskKind) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::Label(format!("a label space needs at least 2 labels, got {}", labels.len())));
        }
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::Label("duplicate label names".into()));
        }
        Ok(LabelSpace { labels, kind })
    }

    /// Sorted union of the labels seen in `train`.
    pub fn from_documents(train: &[RawDocument], kind: TaskKind) -> Result<Self> {
        let set: BTreeSet<&str> = train.iter().flat_map(|d| d.labels.iter().map(String::as_str)).collect();
        LabelSpace::new(set.into_iter().map(str::to_string).collect(), kind)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// SHA-256 of the newline-joined label names, hex encoded. This is the
    /// `label_space_hash` carried by soft-target stores.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.labels.join("\n").as_bytes());
        hex::encode(h.finalize())
    }

    pub fn encode(&self, labels: &[String]) -> Result<LabelTarget> {
        if labels.is_empty() {
            return Err(Error::Label("document has no labels".into()));
        }
        let idx = labels
            .iter()
            .map(|l| self.index_of(l).ok_or_else(|| Error::Label(format!("label {l:?} is not in the label space"))))
            .collect::<Result<Vec<_>>>()?;
        match self.kind {
            TaskKind::SingleLabel => {
                if idx.len() != 1 {
                    return Err(Error::Label(format!(
                        "single-label dataset record carries {} labels",
                        idx.len()
                    )));
                }
                Ok(LabelTarget::Class(idx[0]))
            }
            TaskKind::MultiLabel => {
                let mut v = vec![0.0; self.len()];
                for i in idx {
                    v[i] = 1.0;
                }
                Ok(LabelTarget::MultiHot(v))
            }
        }
    }

    pub fn decode(&self, target: &LabelTarget) -> Vec<String> {
        match target {
            LabelTarget::Class(i) => vec![self.labels[*i].clone()],
            LabelTarget::MultiHot(v) => v
                .iter()
                .zip(&self.labels)
                .filter(|(x, _)| **x == 1.0)
                .map(|(_, l)| l.clone())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LabelTarget {
    MultiHot(Vec<f64>),
    Class(usize),
}

impl LabelTarget {
    pub fn kind(&self) -> TaskKind {
        match self {
            LabelTarget::MultiHot(_) => TaskKind::MultiLabel,
            LabelTarget::Class(_) => TaskKind::SingleLabel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDocument {
    pub id: String,
    pub token_ids: Vec<u32>,
    pub label: LabelTarget,
    pub pos_tags: Option<Vec<String>>,
}

/// Fitted text → id pipeline: vocabulary, label space, optional MSL.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub vocab: Vocabulary,
    pub labels: LabelSpace,
    pub msl: Option<usize>,
}

impl Encoder {
    pub fn fit(train: &[RawDocument], kind: TaskKind, min_count: u64, msl: Option<usize>) -> Result<Self> {
        if msl == Some(0) {
            return Err(Error::config("maximum sequence length must be at least 1"));
        }
        let tokenized: Vec<Vec<String>> = train.iter().map(|d| tokenize(&d.text)).collect();
        let vocab = Vocabulary::build(&tokenized, min_count)?;
        let labels = LabelSpace::from_documents(train, kind)?;
        Ok(Encoder { vocab, labels, msl })
    }

    pub fn encode(&self, doc: &RawDocument) -> Result<EncodedDocument> {
        let mut tokens = tokenize(&doc.text);
        let mut pos = doc.pos_tags.clone();
        if let Some(p) = &pos {
            if p.len() != tokens.len() {
                return Err(Error::Validation(format!(
                    "document {}: {} POS tags for {} tokens",
                    doc.id,
                    p.len(),
                    tokens.len()
                )));
            }
        }
        if let Some(msl) = self.msl {
            tokens = truncate(&tokens, msl)?;
            pos = pos.map(|p| truncate(&p, msl)).transpose()?;
        }
        let label = self
            .labels
            .encode(&doc.labels)
            .map_err(|e| Error::Label(format!("document {}: {e}", doc.id)))?;
        Ok(EncodedDocument {
            id: doc.id.clone(),
            token_ids: self.vocab.encode(&tokens),
            label,
            pos_tags: pos,
        })
    }

    pub fn encode_all(&self, docs: &[RawDocument]) -> Result<Vec<EncodedDocument>> {
        docs.iter().map(|d| self.encode(d)).collect()
    }

    /// Inverse of [`Encoder::encode`] up to `<unk>` collisions and truncation.
    pub fn decode(&self, doc: &EncodedDocument) -> Result<RawDocument> {
        Ok(RawDocument {
            id: doc.id.clone(),
            text: self.vocab.decode(&doc.token_ids)?.join(" "),
            labels: self.labels.decode(&doc.label),
            pos_tags: doc.pos_tags.clone(),
        })
    }
}

/// The three splits of a dataset directory.
#[derive(Debug, Clone)]
pub struct RawSplits {
    pub train: Vec<RawDocument>,
    pub val: Vec<RawDocument>,
    pub test: Vec<RawDocument>,
}

impl RawSplits {
    /// Loads `train.jsonl`, `val.jsonl` and `test.jsonl` from `dir`.
    pub fn load(dir: &Path, kind: TaskKind) -> Result<Self> {
        let load = |name: &str| -> Result<Vec<RawDocument>> {
            let docs = read_documents(&dir.join(format!("{name}.jsonl")))?;
            check_kind(&docs, kind, name)?;
            Ok(docs)
        };
        Ok(RawSplits {
            train: load("train")?,
            val: load("val")?,
            test: load("test")?,
        })
    }

    pub fn split(&self, name: &str) -> Result<&[RawDocument]> {
        match name {
            "train" => Ok(&self.train),
            "val" => Ok(&self.val),
            "test" => Ok(&self.test),
            other => Err(Error::config(format!("unknown split {other:?} (train, val or test)"))),
        }
    }
}

/// Enforces the label-count contract of `kind` on every record.
pub fn check_kind(docs: &[RawDocument], kind: TaskKind, split: &str) -> Result<()> {
    for d in docs {
        if kind == TaskKind::SingleLabel && d.labels.len() != 1 {
            return Err(Error::Label(format!(
                "{split}/{}: single-label dataset record carries {} labels",
                d.id,
                d.labels.len()
            )));
        }
    }
    Ok(())
}

/// Encoded train/val/test plus the fitted encoder.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub encoder: Encoder,
    pub train: Vec<EncodedDocument>,
    pub val: Vec<EncodedDocument>,
    pub test: Vec<EncodedDocument>,
}

impl PreparedCorpus {
    pub fn prepare(raw: &RawSplits, kind: TaskKind, min_count: u64, msl: Option<usize>) -> Result<Self> {
        let encoder = Encoder::fit(&raw.train, kind, min_count, msl)?;
        Ok(PreparedCorpus {
            train: encoder.encode_all(&raw.train)?,
            val: encoder.encode_all(&raw.val)?,
            test: encoder.encode_all(&raw.test)?,
            encoder,
        })
    }

    pub fn split(&self, name: &str) -> Result<&[EncodedDocument]> {
        match name {
            "train" => Ok(&self.train),
            "val" => Ok(&self.val),
            "test" => Ok(&self.test),
            other => Err(Error::config(format!("unknown split {other:?} (train, val or test)"))),
        }
    }
}

/// Indexes documents by id.
pub fn by_id(docs: &[EncodedDocument]) -> HashMap<&str, &EncodedDocument> {
    docs.iter().map(|d| (d.id.as_str(), d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str, labels: &[&str]) -> RawDocument {
        RawDocument {
            id: id.into(),
            text: text.into(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            pos_tags: None,
        }
    }

    #[test]
    fn multi_hot_matches_raw_labels() {
        let train = vec![doc("1", "a b", &["x", "y"]), doc("2", "c", &["z"])];
        let enc = Encoder::fit(&train, TaskKind::MultiLabel, 1, None).unwrap();
        let e = enc.encode(&train[0]).unwrap();
        assert_eq!(e.label, LabelTarget::MultiHot(vec![1.0, 1.0, 0.0]));
        let back: BTreeSet<String> = enc.labels.decode(&e.label).into_iter().collect();
        let orig: BTreeSet<String> = train[0].labels.iter().cloned().collect();
        assert_eq!(back, orig);
    }

    #[test]
    fn single_label_enforced() {
        let train = vec![doc("1", "a", &["pos"]), doc("2", "b", &["neg"])];
        let enc = Encoder::fit(&train, TaskKind::SingleLabel, 1, None).unwrap();
        assert_eq!(enc.encode(&train[0]).unwrap().label, LabelTarget::Class(1));
        assert!(enc.encode(&doc("3", "a", &["pos", "neg"])).is_err());
        assert!(check_kind(&[doc("3", "a", &["pos", "neg"])], TaskKind::SingleLabel, "val").is_err());
    }

    #[test]
    fn unseen_label_is_rejected() {
        let train = vec![doc("1", "a", &["x"]), doc("2", "b", &["y"])];
        let enc = Encoder::fit(&train, TaskKind::MultiLabel, 1, None).unwrap();
        assert!(matches!(enc.encode(&doc("3", "a", &["w"])), Err(Error::Label(_))));
    }

    #[test]
    fn label_space_needs_two_labels() {
        let train = vec![doc("1", "a", &["x"])];
        assert!(Encoder::fit(&train, TaskKind::MultiLabel, 1, None).is_err());
    }

    #[test]
    fn msl_truncates_tokens_and_tags() {
        let mut d = doc("1", "one two three four", &["x"]);
        d.pos_tags = Some(vec!["A".into(), "B".into(), "C".into(), "D".into()]);
        let train = vec![d.clone(), doc("2", "five", &["y"])];
        let enc = Encoder::fit(&train, TaskKind::MultiLabel, 1, Some(2)).unwrap();
        let e = enc.encode(&d).unwrap();
        assert_eq!(e.token_ids.len(), 2);
        assert_eq!(e.pos_tags.unwrap(), vec!["A", "B"]);
    }

    #[test]
    fn misaligned_pos_rejected() {
        let mut d = doc("1", "one two.", &["x"]);
        d.pos_tags = Some(vec!["A".into(), "B".into()]);
        let train = vec![doc("0", "z", &["x"]), doc("2", "y", &["y"])];
        let enc = Encoder::fit(&train, TaskKind::MultiLabel, 1, None).unwrap();
        assert!(matches!(enc.encode(&d), Err(Error::Validation(_))));
    }

    #[test]
    fn encodings_ignore_val_and_test_contents() {
        let train = vec![doc("1", "alpha beta", &["x"]), doc("2", "gamma", &["y"])];
        let a = Encoder::fit(&train, TaskKind::MultiLabel, 1, None).unwrap();
        let b = Encoder::fit(&train, TaskKind::MultiLabel, 1, None).unwrap();
        let probe = doc("9", "beta delta", &["y"]);
        assert_eq!(a.encode(&probe).unwrap(), b.encode(&probe).unwrap());
        assert_eq!(a.vocab.hash(), b.vocab.hash());
    }

    #[test]
    fn label_hash_is_sha256_of_joined_names() {
        let ls = LabelSpace::new(vec!["a".into(), "b".into()], TaskKind::MultiLabel).unwrap();
        // sha256("a\nb")
        assert_eq!(ls.hash(), "7e18f737311b2dc3b2f269dd78396b0351f14fb66efa879f768cb23181883c78");
    }
}
