use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnnotationKind, Corpus, GroundTruthPair};
use crate::error::{Error, Result};

/// Train share used by the archive experiments (80/20).
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_clip_ids: BTreeSet<String>,
    pub test_pairs: Vec<GroundTruthPair>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn test_clip_ids(&self) -> BTreeSet<String> {
        self.test_pairs.iter().map(|p| p.clip_id.clone()).collect()
    }
}

/// Per-clip random partition. Each test clip contributes one ground-truth
/// pair built from one of its captions chosen uniformly.
pub fn make_split(corpus: &Corpus, train_fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::validation(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = corpus.len();
    if n < 2 {
        return Err(Error::validation("a split needs at least 2 clips"));
    }
    let by_clip = corpus.annotations_by_clip();
    for c in corpus.clips() {
        let has_caption = by_clip
            .get(c.clip_id.as_str())
            .is_some_and(|v| v.iter().any(|a| a.kind == AnnotationKind::Caption));
        if !has_caption {
            return Err(Error::validation(format!("clip {:?} has no caption", c.clip_id)));
        }
    }

    let n_train = ((train_fraction * n as f64 + 1e-9).floor() as usize).clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut is_train = vec![false; n];
    for &i in &order[..n_train] {
        is_train[i] = true;
    }

    let mut train_clip_ids = BTreeSet::new();
    let mut test_pairs = Vec::new();
    for (i, clip) in corpus.clips().iter().enumerate() {
        if is_train[i] {
            train_clip_ids.insert(clip.clip_id.clone());
        } else {
            let captions: Vec<_> = by_clip[clip.clip_id.as_str()]
                .iter()
                .filter(|a| a.kind == AnnotationKind::Caption)
                .collect();
            let pick = captions[rng.gen_range(0..captions.len())];
            test_pairs.push(GroundTruthPair {
                query_text: pick.text.clone(),
                clip_id: clip.clip_id.clone(),
                source_kind: AnnotationKind::Caption,
            });
        }
    }
    Ok(DatasetSplit {
        train_clip_ids,
        test_pairs,
        seed,
    })
}
