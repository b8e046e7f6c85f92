use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Annotation, AnnotationKind, Corpus, DatasetSplit, GroundTruthPair, Origin};
use crate::error::{Error, Result};

/// Upper bound on captions swapped for a transcript per training clip.
pub const DEFAULT_REPLACE_MAX: usize = 3;

/// Training annotations where, for every transcribed training clip, between
/// one and `replace_max` captions are swapped for the clip's transcript.
/// Per-clip annotation counts never change.
pub fn build_customised_train(
    corpus: &Corpus,
    split: &DatasetSplit,
    replace_max: usize,
    seed: u64,
) -> Result<Vec<Annotation>> {
    if replace_max < 1 {
        return Err(Error::validation("replace_max must be at least 1"));
    }
    let by_clip = corpus.annotations_by_clip();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for clip in corpus.clips().iter().filter(|c| split.train_clip_ids.contains(&c.clip_id)) {
        let mut anns: Vec<Annotation> = by_clip
            .get(clip.clip_id.as_str())
            .map(|v| v.iter().map(|a| (*a).clone()).collect())
            .unwrap_or_default();
        let caption_slots: Vec<usize> = anns
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind == AnnotationKind::Caption)
            .map(|(i, _)| i)
            .collect();
        if caption_slots.is_empty() {
            return Err(Error::validation(format!(
                "training clip {:?} has no caption",
                clip.clip_id
            )));
        }
        if let Some(transcript) = corpus.transcript(&clip.clip_id) {
            let k = rng.gen_range(1..=replace_max.min(caption_slots.len()));
            for pick in index::sample(&mut rng, caption_slots.len(), k).into_iter() {
                anns[caption_slots[pick]] = Annotation {
                    clip_id: clip.clip_id.clone(),
                    text: transcript.to_owned(),
                    kind: AnnotationKind::Transcript,
                    origin: Origin::Replacement,
                };
            }
        }
        out.extend(anns);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomisedTest {
    pub pairs: Vec<GroundTruthPair>,
    pub requested: usize,
    pub replaced: usize,
    /// Requested replacements that could not be made for lack of transcripts.
    pub shortfall: usize,
}

/// Mixed test set: `floor(fraction × |pairs|)` queries, drawn among pairs
/// whose clip has a transcript, are swapped for that transcript.
pub fn build_customised_test(
    corpus: &Corpus,
    pairs: &[GroundTruthPair],
    fraction: f64,
    seed: u64,
) -> Result<CustomisedTest> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::validation(format!("fraction must lie in [0, 1], got {fraction}")));
    }
    let requested = (fraction * pairs.len() as f64 + 1e-9).floor() as usize;
    let eligible: Vec<usize> = pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| corpus.transcript(&p.clip_id).is_some())
        .map(|(i, _)| i)
        .collect();
    let replaced = requested.min(eligible.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = pairs.to_vec();
    for pick in index::sample(&mut rng, eligible.len(), replaced).into_iter() {
        let pair = &mut out[eligible[pick]];
        pair.query_text = corpus.transcript(&pair.clip_id).unwrap_or_default().to_owned();
        pair.source_kind = AnnotationKind::Transcript;
    }
    Ok(CustomisedTest {
        pairs: out,
        requested,
        replaced,
        shortfall: requested - replaced,
    })
}
