use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::tokenize::{MASK, PAD, UNK};
use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const MASK_ID: u32 = 2;
pub const NUM_SPECIALS: usize = 3;

/// Token inventory with training-split frequencies.
///
/// Ids 0/1/2 are `<pad>`/`<unk>`/`<mask>`; the remaining tokens are ordered by
/// descending frequency, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    freqs: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Counts tokens over already-tokenized training documents.
    pub fn build<'a, I, D>(train_docs: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a String>,
    {
        let mut counts: HashMap<&'a str, u64> = HashMap::new();
        let mut n_docs = 0usize;
        for doc in train_docs {
            n_docs += 1;
            for tok in doc {
                *counts.entry(tok.as_str()).or_default() += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::Corpus("cannot build a vocabulary from an empty training split".into()));
        }
        let mut kept: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_count.max(1) && ![PAD, UNK, MASK].contains(t))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut tokens = vec![PAD.to_string(), UNK.to_string(), MASK.to_string()];
        let mut freqs = vec![0; NUM_SPECIALS];
        for (t, c) in kept {
            tokens.push(t.to_string());
            freqs.push(c);
        }
        Ok(Self::from_parts(tokens, freqs))
    }

    fn from_parts(tokens: Vec<String>, freqs: Vec<u64>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { tokens, freqs, index }
    }

    /// Rebuilds from a stored token list (frequencies unknown, set to zero).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < NUM_SPECIALS || tokens[0] != PAD || tokens[1] != UNK || tokens[2] != MASK {
            return Err(Error::Validation("vocabulary must start with <pad>, <unk>, <mask>".into()));
        }
        let freqs = vec![0; tokens.len()];
        Ok(Self::from_parts(tokens, freqs))
    }

    /// Rebuilds from a stored token list and its training frequencies.
    pub fn with_freqs(tokens: Vec<String>, freqs: Vec<u64>) -> Result<Self> {
        if freqs.len() != tokens.len() {
            return Err(Error::Validation(format!("{} tokens but {} frequencies", tokens.len(), freqs.len())));
        }
        let mut v = Self::from_tokens(tokens)?;
        v.freqs = freqs;
        Ok(v)
    }

    pub fn freqs(&self) -> &[u64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn freq(&self, id: u32) -> u64 {
        self.freqs.get(id as usize).copied().unwrap_or(0)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Result<Vec<String>> {
        ids.iter()
            .map(|&i| {
                self.token(i)
                    .map(str::to_string)
                    .ok_or_else(|| Error::Encoding(format!("token id {i} outside a vocabulary of {}", self.len())))
            })
            .collect()
    }

    /// SHA-256 of the newline-joined token list, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.tokens.join("\n").as_bytes());
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize::tokenize;

    fn docs(texts: &[&str]) -> Vec<Vec<String>> {
        texts.iter().map(|t| tokenize(t)).collect()
    }

    #[test]
    fn min_count_one() {
        let d = docs(&["a b", "b c"]);
        let v = Vocabulary::build(&d, 1).unwrap();
        assert_eq!(v.tokens(), ["<pad>", "<unk>", "<mask>", "b", "a", "c"]);
        assert_eq!(v.freq(v.id("b")), 2);
        assert_eq!(v.freq(v.id("a")), 1);
    }

    #[test]
    fn min_count_two() {
        let d = docs(&["a b", "b c"]);
        let v = Vocabulary::build(&d, 2).unwrap();
        assert_eq!(v.tokens(), ["<pad>", "<unk>", "<mask>", "b"]);
    }

    #[test]
    fn unknown_maps_to_one() {
        let d = docs(&["a b"]);
        let v = Vocabulary::build(&d, 1).unwrap();
        assert_eq!(v.id("zebra"), UNK_ID);
        assert_eq!(v.encode(&tokenize("b zebra")), vec![v.id("b"), UNK_ID]);
    }

    #[test]
    fn empty_split_is_an_error() {
        let d: Vec<Vec<String>> = Vec::new();
        assert!(matches!(Vocabulary::build(&d, 1), Err(Error::Corpus(_))));
    }

    #[test]
    fn decode_round_trip_and_hash_stability() {
        let d = docs(&["the cat sat on the mat .", "a dog"]);
        let v = Vocabulary::build(&d, 1).unwrap();
        let ids = v.encode(&d[0]);
        assert_eq!(v.decode(&ids).unwrap(), d[0]);
        let again = Vocabulary::from_tokens(v.tokens().to_vec()).unwrap();
        assert_eq!(v.hash(), again.hash());
        assert!(v.decode(&[999]).is_err());
    }
}
