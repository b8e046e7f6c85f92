//! Inverted index over clip transcripts with Okapi BM25 scoring.
//!
//! ```text
//! score(D, Q) = Σ_t idf(t) · tf·(k1 + 1) / (tf + k1·(1 − b + b·|D|/avgdl))
//! idf(t)      = ln(1 + (N − df + 0.5) / (df + 0.5))
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::embedding::{Backend, RankedResult};
use crate::error::{Error, Result};
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptDoc {
    pub clip_id: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub clip_id: String,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    pub params: Bm25Params,
    /// Each postings list is sorted by clip_id.
    pub postings: BTreeMap<String, Vec<Posting>>,
    pub doc_len: BTreeMap<String, usize>,
    pub n_docs: usize,
    pub avgdl: f64,
}

impl InvertedIndex {
    pub fn build(docs: &[TranscriptDoc], params: Bm25Params) -> Result<Self> {
        if !(params.k1 >= 0.0 && (0.0..=1.0).contains(&params.b)) {
            return Err(Error::validation(format!(
                "BM25 parameters out of range: k1={}, b={}",
                params.k1, params.b
            )));
        }
        let mut seen = BTreeSet::new();
        for d in docs {
            if !seen.insert(d.clip_id.as_str()) {
                return Err(Error::validation(format!("duplicate clip_id {:?} in transcripts", d.clip_id)));
            }
        }

        let mut postings: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();
        let mut doc_len = BTreeMap::new();
        for d in docs {
            let terms = tokenize(&d.text);
            doc_len.insert(d.clip_id.clone(), terms.len());
            for t in terms {
                *postings.entry(t).or_default().entry(d.clip_id.clone()).or_default() += 1;
            }
        }
        let postings = postings
            .into_iter()
            .map(|(t, docs)| {
                let list = docs.into_iter().map(|(clip_id, tf)| Posting { clip_id, tf }).collect();
                (t, list)
            })
            .collect();
        let n_docs = docs.len();
        let total: usize = doc_len.values().sum();
        let avgdl = if n_docs > 0 { total as f64 / n_docs as f64 } else { 0.0 };
        Ok(Self {
            params,
            postings,
            doc_len,
            n_docs,
            avgdl,
        })
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.doc_freq(term) as f64;
        let n = self.n_docs as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_weight(&self, idf: f64, tf: u32, doc_len: usize) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = tf as f64;
        let len_ratio = if self.avgdl > 0.0 { doc_len as f64 / self.avgdl } else { 0.0 };
        idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len_ratio))
    }

    fn tf(&self, term: &str, clip_id: &str) -> u32 {
        self.postings.get(term).map_or(0, |list| {
            list.binary_search_by(|p| p.clip_id.as_str().cmp(clip_id))
                .map_or(0, |i| list[i].tf)
        })
    }

    pub fn bm25_score(&self, terms: &[String], clip_id: &str) -> Result<f64> {
        let &len = self
            .doc_len
            .get(clip_id)
            .ok_or_else(|| Error::validation(format!("clip {clip_id:?} is not indexed")))?;
        let mut score = 0.0;
        for t in terms {
            let tf = self.tf(t, clip_id);
            if tf > 0 {
                score += self.term_weight(self.idf(t), tf, len);
            }
        }
        Ok(score)
    }

    /// Documents with at least one matching term, best first; ties go to the
    /// smaller clip_id. Zero-score documents are never returned.
    pub fn search(&self, query: &str, k: usize) -> Vec<RankedResult> {
        let terms = tokenize(query);
        let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
        for t in &terms {
            let Some(list) = self.postings.get(t) else { continue };
            let idf = self.idf(t);
            for p in list {
                let w = self.term_weight(idf, p.tf, self.doc_len[&p.clip_id]);
                *scores.entry(p.clip_id.as_str()).or_default() += w;
            }
        }
        let mut hits: Vec<(&str, f64)> = scores.into_iter().filter(|(_, s)| *s > 0.0).collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        hits.truncate(k);
        hits.into_iter()
            .enumerate()
            .map(|(i, (clip_id, score))| RankedResult {
                clip_id: clip_id.to_owned(),
                score,
                rank: i + 1,
                backend: Backend::FullText,
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.n_docs
    }

    pub fn is_empty(&self) -> bool {
        self.n_docs == 0
    }
}
