//! Two-stream joint embedding: hashed text features and video features are
//! projected into one space where paired items score high under cosine.

mod featurizer;
mod loss;
mod model;
mod retrieve;
mod train;

use serde::{Deserialize, Serialize};

pub use featurizer::TextFeaturizer;
pub use loss::{loss_gradient, ranking_loss, Gradients};
pub use model::{similarity, ModelConfig, TwoTowerModel};
pub use retrieve::{retrieve, EmbeddingIndex};
pub use train::{train, TrainConfig, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Embedding,
    FullText,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Embedding => "embedding",
            Backend::FullText => "fulltext",
        }
    }
}

/// One entry of a ranked list. Within a list ranks run 1..n, scores never
/// increase and clip ids are distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub clip_id: String,
    pub score: f64,
    pub rank: usize,
    pub backend: Backend,
}
