use std::sync::Arc;

use super::{similarity, Backend, RankedResult, TwoTowerModel};
use crate::error::{Error, Result};

/// A model together with every clip already encoded into the joint space.
/// Immutable once built; share it behind an `Arc`.
#[derive(Debug, Clone)]
pub struct EmbeddingIndex {
    model: Arc<TwoTowerModel>,
    clips: Vec<(String, Vec<f64>)>,
}

impl EmbeddingIndex {
    /// Clips whose feature projects to the zero vector are left out.
    pub fn build(model: Arc<TwoTowerModel>, features: &[(String, Vec<f64>)]) -> Result<Self> {
        let mut clips = Vec::with_capacity(features.len());
        for (id, f) in features {
            let e = model.encode_video(f)?;
            if e.iter().any(|&v| v != 0.0) {
                clips.push((id.clone(), e));
            }
        }
        Ok(Self { model, clips })
    }

    pub fn model(&self) -> &TwoTowerModel {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    /// Exhaustive cosine ranking, ties broken by ascending clip_id.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<RankedResult>> {
        if self.clips.is_empty() {
            return Ok(Vec::new());
        }
        let q = self.model.encode_query(query);
        if q.iter().all(|&v| v == 0.0) {
            return Err(Error::Unencodable);
        }
        let mut scored: Vec<(&str, f64)> = self
            .clips
            .iter()
            .map(|(id, e)| (id.as_str(), similarity(&q, e)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(i, (id, score))| RankedResult {
                clip_id: id.to_owned(),
                score,
                rank: i + 1,
                backend: Backend::Embedding,
            })
            .collect())
    }
}

/// One-shot retrieval over raw clip features.
pub fn retrieve(
    model: &TwoTowerModel,
    query: &str,
    features: &[(String, Vec<f64>)],
    k: usize,
) -> Result<Vec<RankedResult>> {
    EmbeddingIndex::build(Arc::new(model.clone()), features)?.retrieve(query, k)
}
