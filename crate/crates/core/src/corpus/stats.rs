use serde::{Deserialize, Serialize};

use super::{count_sentences, is_word, tokenize, LabelSpace, RawDocument};
use crate::error::{Error, Result};

/// Dataset summary: classes, samples, mean words and mean sentences per document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    #[serde(rename = "C")]
    pub classes: usize,
    #[serde(rename = "N")]
    pub samples: usize,
    #[serde(rename = "W")]
    pub mean_words: f64,
    #[serde(rename = "S")]
    pub mean_sentences: f64,
}

/// Words are tokens containing an alphanumeric character; sentences end at
/// `.`, `!` or `?` followed by whitespace. Sums run in document order.
pub fn corpus_stats(docs: &[RawDocument], labels: &LabelSpace) -> Result<CorpusStats> {
    if docs.is_empty() {
        return Err(Error::Corpus("cannot summarize an empty corpus".into()));
    }
    let mut words = 0usize;
    let mut sentences = 0usize;
    for d in docs {
        words += tokenize(&d.text).iter().filter(|t| is_word(t)).count();
        sentences += count_sentences(&d.text);
    }
    let n = docs.len() as f64;
    Ok(CorpusStats {
        classes: labels.len(),
        samples: docs.len(),
        mean_words: words as f64 / n,
        mean_sentences: sentences as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TaskKind;

    #[test]
    fn one_sentence_of_five_words() {
        let ls = LabelSpace::new(vec!["a".into(), "b".into(), "c".into()], TaskKind::MultiLabel).unwrap();
        let docs = vec![RawDocument {
            id: "1".into(),
            text: "The quick fox jumped high.".into(),
            labels: vec!["a".into()],
            pos_tags: None,
        }];
        let s = corpus_stats(&docs, &ls).unwrap();
        assert_eq!(s.classes, 3);
        assert_eq!(s.samples, 1);
        assert_eq!(s.mean_words, 5.0);
        assert_eq!(s.mean_sentences, 1.0);
    }

    #[test]
    fn empty_corpus_rejected() {
        let ls = LabelSpace::new(vec!["a".into(), "b".into()], TaskKind::MultiLabel).unwrap();
        assert!(matches!(corpus_stats(&[], &ls), Err(Error::Corpus(_))));
    }
}
