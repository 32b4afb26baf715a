//! Random masking and POS-guided word swapping.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedDocument, Vocabulary, MASK_ID, NUM_SPECIALS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub mask_prob: f64,
    pub swap_prob: f64,
    /// Transfer-set size as a multiple of the training split.
    pub multiplier: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            mask_prob: 0.1,
            swap_prob: 0.1,
            multiplier: 1,
            seed: 1,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.mask_prob) || !unit.contains(&self.swap_prob) {
            return Err(Error::config("mask_prob and swap_prob must lie in [0, 1]"));
        }
        if self.mask_prob + self.swap_prob > 1.0 {
            return Err(Error::config("mask_prob + swap_prob must not exceed 1"));
        }
        if self.multiplier == 0 {
            return Err(Error::config("transfer multiplier must be at least 1"));
        }
        Ok(())
    }
}

/// Frequency-weighted candidate pool.
#[derive(Debug, Clone)]
struct Pool {
    ids: Vec<u32>,
    dist: WeightedIndex<u64>,
}

impl Pool {
    fn new(counts: BTreeMap<u32, u64>) -> Option<Self> {
        let (ids, weights): (Vec<u32>, Vec<u64>) = counts.into_iter().filter(|(_, c)| *c > 0).unzip();
        let dist = WeightedIndex::new(&weights).ok()?;
        Some(Pool { ids, dist })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.ids[self.dist.sample(rng)]
    }
}

/// Swap candidates grouped by POS tag (from tagged training documents) and
/// by frequency quintile (fallback for untagged documents).
#[derive(Debug, Clone)]
pub struct SwapTable {
    by_tag: BTreeMap<String, Pool>,
    quintile_of: Vec<Option<usize>>,
    by_quintile: Vec<Option<Pool>>,
}

impl SwapTable {
    pub fn build(train: &[EncodedDocument], vocab: &Vocabulary) -> Self {
        let mut tag_counts: BTreeMap<String, BTreeMap<u32, u64>> = BTreeMap::new();
        for doc in train {
            if let Some(tags) = &doc.pos_tags {
                for (&id, tag) in doc.token_ids.iter().zip(tags) {
                    if id as usize >= NUM_SPECIALS {
                        *tag_counts.entry(tag.clone()).or_default().entry(id).or_default() += 1;
                    }
                }
            }
        }
        let by_tag = tag_counts
            .into_iter()
            .filter_map(|(t, c)| Pool::new(c).map(|p| (t, p)))
            .collect();

        // Vocabulary ids past the specials are already sorted by descending frequency.
        let words = vocab.len().saturating_sub(NUM_SPECIALS);
        let mut quintile_of = vec![None; vocab.len()];
        let mut buckets: Vec<BTreeMap<u32, u64>> = vec![BTreeMap::new(); 5];
        for rank in 0..words {
            let id = (rank + NUM_SPECIALS) as u32;
            let q = rank * 5 / words;
            quintile_of[id as usize] = Some(q);
            buckets[q].insert(id, vocab.freq(id));
        }
        SwapTable {
            by_tag,
            quintile_of,
            by_quintile: buckets.into_iter().map(Pool::new).collect(),
        }
    }

    fn candidates(&self, id: u32, tag: Option<&str>) -> Option<&Pool> {
        if (id as usize) < NUM_SPECIALS {
            return None;
        }
        match tag {
            Some(t) => self.by_tag.get(t),
            None => {
                let q = self.quintile_of.get(id as usize).copied().flatten()?;
                self.by_quintile[q].as_ref()
            }
        }
    }
}

/// One augmented copy of `doc`. Each token draws one uniform `u`: `u < mask_prob`
/// masks it, `u < mask_prob + swap_prob` swaps it for a same-class word,
/// otherwise it is kept. Length, labels and POS tags are unchanged.
pub fn augment_document<R: Rng + ?Sized>(
    doc: &EncodedDocument,
    table: &SwapTable,
    config: &AugmentConfig,
    copy: usize,
    rng: &mut R,
) -> EncodedDocument {
    let token_ids = doc
        .token_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| {
            let u: f64 = rng.gen();
            if u < config.mask_prob {
                MASK_ID
            } else if u < config.mask_prob + config.swap_prob {
                let tag = doc.pos_tags.as_ref().map(|t| t[i].as_str());
                table.candidates(id, tag).map_or(id, |p| p.sample(rng))
            } else {
                id
            }
        })
        .collect();
    EncodedDocument {
        id: format!("{}#aug{copy}", doc.id),
        token_ids,
        label: doc.label.clone(),
        pos_tags: doc.pos_tags.clone(),
    }
}
