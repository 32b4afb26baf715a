use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusStats, RawDocument};
use crate::error::{Error, Result};

/// Reads a JSON-lines dataset file. Blank lines are skipped; malformed
/// records, empty label lists and duplicate ids are reported with their
/// 1-based line number.
pub fn read_documents(path: &Path) -> Result<Vec<RawDocument>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    let data_err = |line: usize, message: String| Error::Data {
        path: path.display().to_string(),
        line,
        message,
    };
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument = serde_json::from_str(&line).map_err(|e| data_err(i + 1, e.to_string()))?;
        if doc.labels.is_empty() {
            return Err(data_err(i + 1, format!("document {} has no labels", doc.id)));
        }
        if !seen.insert(doc.id.clone()) {
            return Err(data_err(i + 1, format!("duplicate document id {}", doc.id)));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_documents(path: &Path, docs: &[RawDocument]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for d in docs {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Expected statistics of one split, as pinned in a fixture manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStatsEntry {
    #[serde(flatten)]
    pub stats: CorpusStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureCorpus {
    pub kind: crate::TaskKind,
    pub splits: BTreeMap<String, SplitStatsEntry>,
}

/// Pins expected corpus statistics (and harness tolerances) for bundled
/// mini-corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub corpora: BTreeMap<String, FixtureCorpus>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl FixtureManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
