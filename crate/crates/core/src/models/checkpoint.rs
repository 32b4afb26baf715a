//! Binary checkpoint format:
//!
//! ```text
//! b"DDC1" | u64 LE header length | JSON header | f64 LE values per tensor, in header order
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::student::{LstmParams, StudentConfig, StudentModel};
use crate::corpus::{LabelSpace, Vocabulary};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DDC1";

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: StudentConfig,
    label_space: LabelSpace,
    vocab_hash: String,
    vocab: Vec<String>,
    #[serde(default)]
    vocab_freqs: Vec<u64>,
    seed: u64,
    metadata: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

/// A trained student plus everything needed to encode inputs for it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: StudentModel,
    pub labels: LabelSpace,
    pub vocab: Vocabulary,
    pub seed: u64,
    pub metadata: serde_json::Value,
}

impl Checkpoint {
    pub fn vocab_hash(&self) -> String {
        self.vocab.hash()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let names = StudentModel::tensor_names();
        let tensors = self.model.tensors();
        let header = Header {
            config: self.model.config.clone(),
            label_space: self.labels.clone(),
            vocab_hash: self.vocab.hash(),
            vocab: self.vocab.tokens().to_vec(),
            vocab_freqs: self.vocab.freqs().to_vec(),
            seed: self.seed,
            metadata: self.metadata.clone(),
            tensors: names
                .iter()
                .zip(tensors.iter())
                .map(|(n, t)| TensorEntry {
                    name: n.to_string(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let payload: usize = tensors.iter().map(|t| t.numel() * 8).sum();
        let mut out = Vec::with_capacity(12 + json.len() + payload);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for t in tensors {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < 12 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(bad("missing DDC1 magic"));
        }
        let len = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes")) as usize;
        let header_end = 12usize.checked_add(len).filter(|&e| e <= bytes.len()).ok_or_else(|| bad("truncated header"))?;
        let header: Header =
            serde_json::from_slice(&bytes[12..header_end]).map_err(|e| bad(&format!("unreadable header: {e}")))?;
        header.config.validate()?;

        let names = StudentModel::tensor_names();
        if header.tensors.len() != names.len() || header.tensors.iter().zip(names).any(|(t, n)| t.name != n) {
            return Err(bad("unexpected tensor list"));
        }
        let mut offset = header_end;
        let mut tensors = Vec::with_capacity(names.len());
        for entry in &header.tensors {
            let n: usize = entry.shape.iter().product();
            let end = offset + n * 8;
            if end > bytes.len() {
                return Err(bad(&format!("truncated data for {}", entry.name)));
            }
            let data = bytes[offset..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            tensors.push(Tensor::new(entry.shape.clone(), data)?);
            offset = end;
        }
        if offset != bytes.len() {
            return Err(bad("trailing bytes after tensor data"));
        }
        let vocab = if header.vocab_freqs.is_empty() {
            Vocabulary::from_tokens(header.vocab)?
        } else {
            Vocabulary::with_freqs(header.vocab, header.vocab_freqs)?
        };
        if vocab.hash() != header.vocab_hash {
            return Err(bad("vocabulary hash mismatch"));
        }
        let mut it = tensors.into_iter();
        let mut next = || it.next().expect("nine tensors");
        let embedding = next();
        let forward_lstm = LstmParams {
            w_ih: next(),
            w_hh: next(),
            bias: next(),
        };
        let backward_lstm = LstmParams {
            w_ih: next(),
            w_hh: next(),
            bias: next(),
        };
        let model = StudentModel {
            config: header.config,
            embedding,
            forward_lstm,
            backward_lstm,
            head_weight: next(),
            head_bias: next(),
        };
        check_shapes(&model)?;
        Ok(Checkpoint {
            model,
            labels: header.label_space,
            vocab,
            seed: header.seed,
            metadata: header.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_bytes(&bytes)
    }
}

fn check_shapes(m: &StudentModel) -> Result<()> {
    let c = &m.config;
    let (v, e, h, k) = (c.vocab_size, c.embedding_dim, c.hidden_units, c.num_classes);
    let expected: [&[usize]; 9] = [
        &[v, e],
        &[e, 4 * h],
        &[h, 4 * h],
        &[1, 4 * h],
        &[e, 4 * h],
        &[h, 4 * h],
        &[1, 4 * h],
        &[2 * h, k],
        &[1, k],
    ];
    for ((name, t), shape) in StudentModel::tensor_names().iter().zip(m.tensors()).zip(expected) {
        if t.shape() != shape {
            return Err(Error::Checkpoint(format!(
                "{name} has shape {:?}, config implies {shape:?}",
                t.shape()
            )));
        }
    }
    Ok(())
}
