//! Archival data model: clips, their annotations, transcripts and video
//! features, plus the dataset builders that operate on them.

mod customise;
pub mod io;
mod shots;
mod split;
pub mod synth;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textsearch::TranscriptDoc;

pub use customise::{build_customised_test, build_customised_train, CustomisedTest, DEFAULT_REPLACE_MAX};
pub use shots::{group_shot_records, group_shots, ShotInterval, ShotRecord, MIN_CLIP_SECONDS};
pub use split::{make_split, DatasetSplit, DEFAULT_TRAIN_FRACTION};
pub use synth::{synth_corpus, synth_quote_sources, SynthConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clip {
    pub clip_id: String,
    pub video_id: String,
    pub start_s: f64,
    pub end_s: f64,
    #[serde(skip)]
    pub video_feature: Option<Vec<f64>>,
}

impl Clip {
    pub fn new(clip_id: impl Into<String>, video_id: impl Into<String>, start_s: f64, end_s: f64) -> Self {
        Self {
            clip_id: clip_id.into(),
            video_id: video_id.into(),
            start_s,
            end_s,
            video_feature: None,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    Caption,
    Transcript,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Original,
    /// Produced by the customised training-set builder.
    Replacement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub clip_id: String,
    pub text: String,
    pub kind: AnnotationKind,
    pub origin: Origin,
}

impl Annotation {
    pub fn caption(clip_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            clip_id: clip_id.into(),
            text: text.into(),
            kind: AnnotationKind::Caption,
            origin: Origin::Original,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthPair {
    pub query_text: String,
    pub clip_id: String,
    pub source_kind: AnnotationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub clip_id: String,
    pub vector: Vec<f64>,
}

/// An archive's clips together with everything attached to them.
///
/// Every mutating method validates its whole input before touching the
/// corpus, so a rejected batch leaves it unchanged.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    clips: Vec<Clip>,
    position: BTreeMap<String, usize>,
    annotations: Vec<Annotation>,
    transcripts: BTreeMap<String, String>,
    video_dim: Option<usize>,
}

impl Corpus {
    pub fn new(clips: Vec<Clip>) -> Result<Self> {
        let mut corpus = Self::default();
        corpus.add_clips(clips)?;
        Ok(corpus)
    }

    pub fn add_clips(&mut self, clips: Vec<Clip>) -> Result<()> {
        let mut seen = BTreeSet::new();
        for clip in &clips {
            if clip.clip_id.is_empty() {
                return Err(Error::validation("clip_id must not be empty"));
            }
            if self.position.contains_key(&clip.clip_id) || !seen.insert(clip.clip_id.as_str()) {
                return Err(Error::validation(format!("duplicate clip_id {:?}", clip.clip_id)));
            }
            if !(clip.start_s >= 0.0 && clip.end_s > clip.start_s && clip.end_s.is_finite()) {
                return Err(Error::validation(format!(
                    "clip {:?} has invalid span [{}, {}]",
                    clip.clip_id, clip.start_s, clip.end_s
                )));
            }
        }
        let features: Vec<FeatureRecord> = clips
            .iter()
            .filter_map(|c| {
                c.video_feature.as_ref().map(|v| FeatureRecord {
                    clip_id: c.clip_id.clone(),
                    vector: v.clone(),
                })
            })
            .collect();
        let dim = self.check_features(&features, &clips)?;
        for clip in clips {
            self.position.insert(clip.clip_id.clone(), self.clips.len());
            self.clips.push(clip);
        }
        if dim.is_some() {
            self.video_dim = dim;
        }
        Ok(())
    }

    /// Attaches annotations. Original transcript-kind records are routed to
    /// the transcript table; everything else is kept as an annotation.
    pub fn add_annotations(&mut self, annotations: Vec<Annotation>) -> Result<()> {
        for a in &annotations {
            self.require_clip(&a.clip_id)?;
            if a.text.trim().is_empty() {
                return Err(Error::validation(format!(
                    "annotation for clip {:?} has empty text",
                    a.clip_id
                )));
            }
        }
        for a in annotations {
            if a.kind == AnnotationKind::Transcript && a.origin == Origin::Original {
                self.append_transcript(a.clip_id, &a.text);
            } else {
                self.annotations.push(a);
            }
        }
        Ok(())
    }

    pub fn add_transcripts(&mut self, docs: Vec<TranscriptDoc>) -> Result<()> {
        for d in &docs {
            self.require_clip(&d.clip_id)?;
        }
        for d in docs {
            if !d.text.trim().is_empty() {
                self.append_transcript(d.clip_id, &d.text);
            }
        }
        Ok(())
    }

    pub fn set_features(&mut self, features: Vec<FeatureRecord>) -> Result<()> {
        let dim = self.check_features(&features, &[])?;
        for f in features {
            let idx = self.position[&f.clip_id];
            self.clips[idx].video_feature = Some(f.vector);
        }
        if dim.is_some() {
            self.video_dim = dim;
        }
        Ok(())
    }

    fn check_features(&self, features: &[FeatureRecord], pending: &[Clip]) -> Result<Option<usize>> {
        let mut dim = self.video_dim;
        for f in features {
            if !self.position.contains_key(&f.clip_id) && !pending.iter().any(|c| c.clip_id == f.clip_id) {
                return Err(Error::validation(format!("feature for unknown clip {:?}", f.clip_id)));
            }
            if f.vector.is_empty() || f.vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!(
                    "feature for clip {:?} must be a non-empty vector of finite reals",
                    f.clip_id
                )));
            }
            match dim {
                Some(d) if d != f.vector.len() => {
                    return Err(Error::validation(format!(
                        "feature for clip {:?} has dimension {}, corpus uses {}",
                        f.clip_id,
                        f.vector.len(),
                        d
                    )))
                }
                _ => dim = Some(f.vector.len()),
            }
        }
        Ok(dim)
    }

    fn append_transcript(&mut self, clip_id: String, text: &str) {
        let text = text.trim();
        self.transcripts
            .entry(clip_id)
            .and_modify(|t| {
                t.push(' ');
                t.push_str(text);
            })
            .or_insert_with(|| text.to_owned());
    }

    fn require_clip(&self, clip_id: &str) -> Result<()> {
        if self.position.contains_key(clip_id) {
            Ok(())
        } else {
            Err(Error::validation(format!("unknown clip_id {clip_id:?}")))
        }
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn clips(&self) -> &[Clip] {
        &self.clips
    }

    pub fn clip(&self, clip_id: &str) -> Option<&Clip> {
        self.position.get(clip_id).map(|&i| &self.clips[i])
    }

    pub fn contains(&self, clip_id: &str) -> bool {
        self.position.contains_key(clip_id)
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn captions_of(&self, clip_id: &str) -> Vec<&Annotation> {
        self.annotations
            .iter()
            .filter(|a| a.clip_id == clip_id && a.kind == AnnotationKind::Caption)
            .collect()
    }

    /// Annotations grouped per clip, in corpus clip order; clips without any
    /// annotation are absent.
    pub fn annotations_by_clip(&self) -> BTreeMap<&str, Vec<&Annotation>> {
        let mut map: BTreeMap<&str, Vec<&Annotation>> = BTreeMap::new();
        for a in &self.annotations {
            map.entry(a.clip_id.as_str()).or_default().push(a);
        }
        map
    }

    pub fn transcript(&self, clip_id: &str) -> Option<&str> {
        self.transcripts.get(clip_id).map(String::as_str)
    }

    pub fn transcripts(&self) -> &BTreeMap<String, String> {
        &self.transcripts
    }

    /// One document per clip, in corpus order; clips without a transcript get
    /// an empty document.
    pub fn transcript_docs(&self) -> Vec<TranscriptDoc> {
        self.clips
            .iter()
            .map(|c| TranscriptDoc {
                clip_id: c.clip_id.clone(),
                text: self.transcripts.get(&c.clip_id).cloned().unwrap_or_default(),
            })
            .collect()
    }

    pub fn feature(&self, clip_id: &str) -> Option<&[f64]> {
        self.clip(clip_id).and_then(|c| c.video_feature.as_deref())
    }

    pub fn video_dim(&self) -> Option<usize> {
        self.video_dim
    }

    /// `(clip_id, feature)` for every clip that has one, in corpus order.
    pub fn features(&self) -> Vec<(String, Vec<f64>)> {
        self.clips
            .iter()
            .filter_map(|c| c.video_feature.as_ref().map(|v| (c.clip_id.clone(), v.clone())))
            .collect()
    }

    /// Restriction of this corpus to `clip_ids`, keeping corpus order.
    pub fn subset(&self, clip_ids: &BTreeSet<String>) -> Corpus {
        let mut out = Corpus::default();
        for c in self.clips.iter().filter(|c| clip_ids.contains(&c.clip_id)) {
            out.position.insert(c.clip_id.clone(), out.clips.len());
            out.clips.push(c.clone());
        }
        out.annotations = self
            .annotations
            .iter()
            .filter(|a| clip_ids.contains(&a.clip_id))
            .cloned()
            .collect();
        out.transcripts = self
            .transcripts
            .iter()
            .filter(|(k, _)| clip_ids.contains(*k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        out.video_dim = self.video_dim;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Corpus {
        Corpus::new(vec![Clip::new("a", "v", 0.0, 12.0), Clip::new("b", "v", 12.0, 30.0)]).unwrap()
    }

    #[test]
    fn duplicate_clip_ids_are_rejected() {
        let err = Corpus::new(vec![Clip::new("a", "v", 0.0, 1.0), Clip::new("a", "v", 1.0, 2.0)]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn failed_annotation_batch_leaves_corpus_unchanged() {
        let mut c = tiny();
        let batch = vec![Annotation::caption("a", "a dog"), Annotation::caption("zzz", "orphan")];
        assert!(c.add_annotations(batch).is_err());
        assert!(c.annotations().is_empty());
    }

    #[test]
    fn blank_annotation_text_rejected() {
        let mut c = tiny();
        assert!(c.add_annotations(vec![Annotation::caption("a", "   ")]).is_err());
    }

    #[test]
    fn transcript_annotations_route_to_transcript_table() {
        let mut c = tiny();
        c.add_annotations(vec![Annotation {
            clip_id: "b".into(),
            text: "we will win".into(),
            kind: AnnotationKind::Transcript,
            origin: Origin::Original,
        }])
        .unwrap();
        assert_eq!(c.transcript("b"), Some("we will win"));
        assert!(c.annotations().is_empty());
    }

    #[test]
    fn feature_dimensions_must_agree() {
        let mut c = tiny();
        c.set_features(vec![FeatureRecord { clip_id: "a".into(), vector: vec![1.0, 2.0] }])
            .unwrap();
        let bad = vec![FeatureRecord { clip_id: "b".into(), vector: vec![1.0] }];
        assert!(c.set_features(bad).is_err());
        let nan = vec![FeatureRecord { clip_id: "b".into(), vector: vec![f64::NAN, 1.0] }];
        assert!(c.set_features(nan).is_err());
        assert!(c.feature("b").is_none());
        assert_eq!(c.video_dim(), Some(2));
    }
}
