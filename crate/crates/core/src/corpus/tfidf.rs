use super::{EncodedDocument, NUM_SPECIALS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.indices.iter().zip(&self.values).map(|(&i, v)| v * dense[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Row-sparse N×V matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub rows: Vec<SparseRow>,
    pub cols: usize,
}

/// tf–idf with smoothed idf: `tf(t,d) · (ln((1+N)/(1+df(t))) + 1)`, rows
/// L2-normalized. Special tokens (pad/unk/mask) are not features.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfVectorizer {
    idf: Vec<f64>,
}

impl TfidfVectorizer {
    /// Fits document frequencies on the training split.
    pub fn fit(train: &[EncodedDocument], vocab_size: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Corpus("cannot fit tf-idf on an empty training split".into()));
        }
        let mut df = vec![0usize; vocab_size];
        let mut seen = vec![usize::MAX; vocab_size];
        for (d, doc) in train.iter().enumerate() {
            for &t in &doc.token_ids {
                let t = t as usize;
                if t >= vocab_size {
                    return Err(Error::Encoding(format!("token id {t} outside a vocabulary of {vocab_size}")));
                }
                if seen[t] != d {
                    seen[t] = d;
                    df[t] += 1;
                }
            }
        }
        let n = train.len() as f64;
        let idf = df.iter().map(|&c| ((1.0 + n) / (1.0 + c as f64)).ln() + 1.0).collect();
        Ok(TfidfVectorizer { idf })
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn transform_one(&self, doc: &EncodedDocument) -> SparseRow {
        let mut ids: Vec<usize> = doc
            .token_ids
            .iter()
            .map(|&t| t as usize)
            .filter(|&t| t >= NUM_SPECIALS && t < self.idf.len())
            .collect();
        ids.sort_unstable();
        let mut row = SparseRow::default();
        let mut i = 0;
        while i < ids.len() {
            let t = ids[i];
            let mut j = i;
            while j < ids.len() && ids[j] == t {
                j += 1;
            }
            row.indices.push(t);
            row.values.push((j - i) as f64 * self.idf[t]);
            i = j;
        }
        let norm = row.norm();
        if norm > 0.0 {
            for v in &mut row.values {
                *v /= norm;
            }
        }
        row
    }

    pub fn transform(&self, docs: &[EncodedDocument]) -> SparseMatrix {
        SparseMatrix {
            rows: docs.iter().map(|d| self.transform_one(d)).collect(),
            cols: self.idf.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabelTarget;

    fn doc(ids: &[u32]) -> EncodedDocument {
        EncodedDocument {
            id: "d".into(),
            token_ids: ids.to_vec(),
            label: LabelTarget::Class(0),
            pos_tags: None,
        }
    }

    #[test]
    fn single_term_single_doc_normalizes_to_one() {
        let d = vec![doc(&[3, 3])];
        let v = TfidfVectorizer::fit(&d, 4).unwrap();
        let m = v.transform(&d);
        assert_eq!(m.rows[0].indices, vec![3]);
        assert!((m.rows[0].values[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rarer_term_gets_larger_idf() {
        // docs ["a", "a b"] with a = 3, b = 4.
        let d = vec![doc(&[3]), doc(&[3, 4])];
        let v = TfidfVectorizer::fit(&d, 5).unwrap();
        // idf(a) = ln(3/3) + 1 = 1; idf(b) = ln(3/2) + 1
        assert!((v.idf()[3] - 1.0).abs() < 1e-15);
        assert!((v.idf()[4] - (1.5f64.ln() + 1.0)).abs() < 1e-15);
        assert!(v.idf()[4] > v.idf()[3]);
    }

    #[test]
    fn rows_are_unit_norm() {
        let d = vec![doc(&[3, 4, 4, 5]), doc(&[5, 6, 1]), doc(&[7, 7, 7, 3])];
        let v = TfidfVectorizer::fit(&d, 8).unwrap();
        for r in v.transform(&d).rows {
            assert!((r.norm() - 1.0).abs() < 1e-12);
        }
        // unk / specials only -> empty row
        assert!(v.transform_one(&doc(&[1, 0])).indices.is_empty());
    }
}
