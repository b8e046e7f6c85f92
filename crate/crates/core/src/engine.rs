//! The bound engine: a corpus plus whichever models, classifier and index
//! are currently attached, and the retrieval methods built from them.
//!
//! An [`Engine`] value never changes. Every mutation returns a new engine
//! that the owner swaps in, so readers always see a consistent set of
//! bindings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classifier::{
    build_training_set, evaluate_classifier, train_classifier, ClassifierConfig, ClassifierMetrics, QueryClass,
    QuoteRuleSet, SequenceClassifier, TrainingCurve,
};
use crate::corpus::{
    build_customised_train, io, synth_quote_sources, Annotation, AnnotationKind, Clip, Corpus, DatasetSplit,
    FeatureRecord, Origin, DEFAULT_REPLACE_MAX,
};
use crate::embedding::{train, Backend, EmbeddingIndex, ModelConfig, TrainConfig, TrainReport, TwoTowerModel};
use crate::error::{Error, Result};
use crate::pipeline::EvalReport;
use crate::router::{MethodKind, RetrievalMethod, RoutingPolicy};
use crate::text::preview;
use crate::textsearch::{Bm25Params, InvertedIndex, TranscriptDoc};

pub const DEFAULT_K: usize = 3;
pub const PREVIEW_CHARS: usize = 120;
pub const METHODS_FILE: &str = "methods.json";

/// `methods.json`: which artifact files back each method. Relative paths
/// resolve against the directory holding the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BindingConfig {
    pub corpus: PathBuf,
    #[serde(default)]
    pub methods: BTreeMap<String, MethodBinding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodBinding {
    pub model: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifier: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<PathBuf>,
}

fn existing(base: &Path, rel: &Path) -> Result<PathBuf> {
    let p = base.join(rel);
    if p.exists() {
        Ok(p)
    } else {
        Err(Error::Config(format!("missing artifact: {}", p.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub corpus_size: usize,
    pub methods: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub rank: usize,
    pub clip_id: String,
    pub score: f64,
    pub backend: Backend,
    pub video_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub caption_preview: Option<String>,
    pub transcript_preview: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: String,
    pub method: String,
    pub k: usize,
    pub backend: Backend,
    pub decided_class: Option<QueryClass>,
    pub results: Vec<SearchHit>,
}

#[derive(Debug, Clone, Default)]
pub struct Engine {
    corpus: Arc<Corpus>,
    models: BTreeMap<MethodKind, Arc<TwoTowerModel>>,
    classifier: Option<Arc<SequenceClassifier>>,
    fulltext: Option<Arc<InvertedIndex>>,
    methods: BTreeMap<MethodKind, RetrievalMethod>,
    report: Option<Arc<EvalReport>>,
}

impl Engine {
    pub fn new(corpus: Corpus) -> Self {
        Self {
            corpus: Arc::new(corpus),
            ..Default::default()
        }
    }

    /// Loads the corpus and every artifact named in a `methods.json`.
    pub fn open(config_path: &Path) -> Result<Self> {
        let config: BindingConfig = io::read_json(config_path)?;
        let base = config_path.parent().unwrap_or(Path::new("."));
        let corpus = Corpus::load_dir(&existing(base, &config.corpus)?)?;
        let mut engine = Engine::new(corpus);
        for (label, binding) in &config.methods {
            let kind: MethodKind = label.parse()?;
            let model = TwoTowerModel::load_json(&existing(base, &binding.model)?)?;
            engine.models.insert(kind, Arc::new(model));
            if kind == MethodKind::ClassifierEnhanced {
                let index = binding
                    .index
                    .as_ref()
                    .ok_or_else(|| Error::Config("classifier method needs an index artifact".into()))?;
                engine.fulltext = Some(Arc::new(io::read_json(&existing(base, index)?)?));
                if let Some(c) = &binding.classifier {
                    engine.classifier = Some(Arc::new(SequenceClassifier::load_json(&existing(base, c)?)?));
                }
            }
        }
        if let Some(r) = &config.report {
            engine.report = Some(Arc::new(io::read_json(&existing(base, r)?)?));
        }
        engine.rebind()?;
        Ok(engine)
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn corpus_arc(&self) -> Arc<Corpus> {
        self.corpus.clone()
    }

    pub fn method(&self, kind: MethodKind) -> Option<&RetrievalMethod> {
        self.methods.get(&kind)
    }

    pub fn bound_methods(&self) -> Vec<String> {
        self.methods.keys().map(|k| k.label().to_owned()).collect()
    }

    pub fn model(&self, kind: MethodKind) -> Option<&Arc<TwoTowerModel>> {
        self.models.get(&kind)
    }

    pub fn classifier(&self) -> Option<&Arc<SequenceClassifier>> {
        self.classifier.as_ref()
    }

    pub fn fulltext(&self) -> Option<&Arc<InvertedIndex>> {
        self.fulltext.as_ref()
    }

    pub fn report(&self) -> Option<&Arc<EvalReport>> {
        self.report.as_ref()
    }

    pub fn health(&self) -> Health {
        Health {
            status: "ok".into(),
            corpus_size: self.corpus.len(),
            methods: self.bound_methods(),
        }
    }

    /// Routing policy of the classifier-enhanced method: the trained
    /// classifier when one is bound, the quote rules otherwise.
    pub fn policy(&self) -> RoutingPolicy {
        match &self.classifier {
            Some(c) => RoutingPolicy::Classifier(c.clone()),
            None => RoutingPolicy::Rules(Arc::new(QuoteRuleSet::standard())),
        }
    }

    pub fn classify(&self, text: &str) -> QueryClass {
        self.policy().decide(text)
    }

    /// Rebuilds every method from the current bindings. The classifier
    /// method uses its own model when one is bound, the baseline model
    /// otherwise, and exists only while a full-text index is bound.
    fn rebind(&mut self) -> Result<()> {
        let features = self.corpus.features();
        let mut indexes: BTreeMap<MethodKind, Arc<EmbeddingIndex>> = BTreeMap::new();
        for (kind, model) in &self.models {
            if let Some(dim) = self.corpus.video_dim() {
                if dim != model.video_dim {
                    return Err(Error::DimensionMismatch {
                        expected: model.video_dim,
                        actual: dim,
                    });
                }
            }
            indexes.insert(*kind, Arc::new(EmbeddingIndex::build(model.clone(), &features)?));
        }
        let mut methods = BTreeMap::new();
        if let Some(e) = indexes.get(&MethodKind::Baseline) {
            methods.insert(MethodKind::Baseline, RetrievalMethod::baseline(e.clone()));
        }
        if let Some(e) = indexes.get(&MethodKind::Customised) {
            methods.insert(MethodKind::Customised, RetrievalMethod::customised(e.clone()));
        }
        let cls_index = indexes
            .get(&MethodKind::ClassifierEnhanced)
            .or_else(|| indexes.get(&MethodKind::Baseline));
        if let (Some(e), Some(f)) = (cls_index, &self.fulltext) {
            methods.insert(
                MethodKind::ClassifierEnhanced,
                RetrievalMethod::classifier_enhanced(e.clone(), f.clone(), self.policy()),
            );
        }
        self.methods = methods;
        Ok(())
    }

    fn with(&self, f: impl FnOnce(&mut Engine) -> Result<()>) -> Result<Engine> {
        let mut next = self.clone();
        f(&mut next)?;
        next.rebind()?;
        Ok(next)
    }

    fn with_corpus(&self, f: impl FnOnce(&mut Corpus) -> Result<()>) -> Result<Engine> {
        self.with(|e| {
            let mut corpus = (*e.corpus).clone();
            f(&mut corpus)?;
            e.corpus = Arc::new(corpus);
            // Results computed on the old corpus no longer describe it.
            e.report = None;
            Ok(())
        })
    }

    pub fn ingest_clips(&self, clips: Vec<Clip>) -> Result<Engine> {
        self.with_corpus(|c| c.add_clips(clips))
    }

    pub fn ingest_annotations(&self, annotations: Vec<Annotation>) -> Result<Engine> {
        self.with_corpus(|c| c.add_annotations(annotations))
    }

    pub fn ingest_features(&self, features: Vec<FeatureRecord>) -> Result<Engine> {
        self.with_corpus(|c| c.set_features(features))
    }

    pub fn ingest_transcripts(&self, docs: Vec<TranscriptDoc>) -> Result<Engine> {
        self.with_corpus(|c| c.add_transcripts(docs))
    }

    pub fn bind_model(&self, kind: MethodKind, model: TwoTowerModel) -> Result<Engine> {
        self.with(|e| {
            e.models.insert(kind, Arc::new(model));
            Ok(())
        })
    }

    pub fn bind_classifier(&self, classifier: SequenceClassifier) -> Result<Engine> {
        self.with(|e| {
            e.classifier = Some(Arc::new(classifier));
            Ok(())
        })
    }

    pub fn bind_index(&self, index: InvertedIndex) -> Result<Engine> {
        self.with(|e| {
            e.fulltext = Some(Arc::new(index));
            Ok(())
        })
    }

    pub fn with_report(&self, report: EvalReport) -> Engine {
        let mut next = self.clone();
        next.report = Some(Arc::new(report));
        next
    }

    /// Routed search with clip metadata attached. `k` defaults to
    /// [`DEFAULT_K`] and must lie in `1..=corpus size`.
    pub fn search(&self, method: &str, query: &str, k: Option<usize>) -> Result<SearchResponse> {
        let kind: MethodKind = method.parse()?;
        if self.methods.is_empty() {
            return Err(Error::NotBound("search is refused until a method is bound".into()));
        }
        let bound = self
            .methods
            .get(&kind)
            .ok_or_else(|| Error::NotBound(format!("{kind} is not bound")))?;
        if query.trim().is_empty() {
            return Err(Error::validation("query text is empty"));
        }
        let k = k.unwrap_or(DEFAULT_K);
        if k < 1 || k > self.corpus.len() {
            return Err(Error::validation(format!(
                "k must lie in 1..={}, got {k}",
                self.corpus.len()
            )));
        }
        let outcome = bound.query(query, k)?;
        let results = outcome
            .results
            .into_iter()
            .map(|r| {
                let clip = self.corpus.clip(&r.clip_id);
                SearchHit {
                    rank: r.rank,
                    video_id: clip.map(|c| c.video_id.clone()).unwrap_or_default(),
                    start_s: clip.map_or(0.0, |c| c.start_s),
                    end_s: clip.map_or(0.0, |c| c.end_s),
                    caption_preview: self
                        .corpus
                        .captions_of(&r.clip_id)
                        .first()
                        .map(|a| preview(&a.text, PREVIEW_CHARS)),
                    transcript_preview: self.corpus.transcript(&r.clip_id).map(|t| preview(t, PREVIEW_CHARS)),
                    clip_id: r.clip_id,
                    score: r.score,
                    backend: r.backend,
                }
            })
            .collect();
        Ok(SearchResponse {
            query: query.to_owned(),
            method: kind.label().to_owned(),
            k,
            backend: outcome.routed.backend_used,
            decided_class: outcome.routed.decided_class,
            results,
        })
    }
}

/// Original captions of every clip in `corpus`.
pub fn original_captions(corpus: &Corpus) -> Vec<Annotation> {
    corpus
        .annotations()
        .iter()
        .filter(|a| a.kind == AnnotationKind::Caption && a.origin == Origin::Original)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingTrainRequest {
    pub method: MethodKind,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub replace_max: usize,
    pub joint_dim: usize,
}

impl Default for EmbeddingTrainRequest {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            method: MethodKind::Baseline,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            seed: 0,
            replace_max: DEFAULT_REPLACE_MAX,
            joint_dim: ModelConfig::default().joint_dim,
        }
    }
}

/// Trains an embedding model on the whole corpus: original captions for the
/// baseline, the transcript-customised annotations for the customised model.
pub fn train_embedding_on(corpus: &Corpus, req: &EmbeddingTrainRequest) -> Result<(TwoTowerModel, TrainReport)> {
    let video_dim = corpus
        .video_dim()
        .ok_or_else(|| Error::validation("corpus has no video features"))?;
    let annotations = match req.method {
        MethodKind::Baseline => original_captions(corpus),
        MethodKind::Customised => {
            let all = DatasetSplit {
                train_clip_ids: corpus.clips().iter().map(|c| c.clip_id.clone()).collect(),
                test_pairs: Vec::new(),
                seed: req.seed,
            };
            build_customised_train(corpus, &all, req.replace_max, req.seed.wrapping_add(1))?
        }
        MethodKind::ClassifierEnhanced => {
            return Err(Error::validation(
                "the classifier method reuses the baseline model; train baseline instead",
            ))
        }
    };
    let model_cfg = ModelConfig {
        joint_dim: req.joint_dim,
        ..Default::default()
    };
    let init = TwoTowerModel::init(&model_cfg, video_dim, req.seed)?;
    let cfg = TrainConfig {
        learning_rate: req.learning_rate,
        epochs: req.epochs,
        batch_size: req.batch_size,
        seed: req.seed.wrapping_add(2),
    };
    train(init, &annotations, corpus, &cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierTrainRequest {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub n_quote_sources: usize,
    pub quote_vocab: usize,
    pub n_captions: usize,
    /// Replaces the synthetic quote sources when given.
    pub quote_sources: Option<Vec<String>>,
}

impl Default for ClassifierTrainRequest {
    fn default() -> Self {
        let c = ClassifierConfig::default();
        Self {
            seed: 0,
            epochs: c.epochs,
            learning_rate: c.learning_rate,
            n_quote_sources: 2000,
            quote_vocab: 200,
            n_captions: 2000,
            quote_sources: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierTrainOutcome {
    #[serde(skip)]
    pub model: Option<SequenceClassifier>,
    pub n_train: usize,
    pub n_test: usize,
    pub rejected_quote_sources: usize,
    pub warnings: Vec<String>,
    pub metrics: ClassifierMetrics,
    pub curve: TrainingCurve,
}

/// Builds the labeled set from quote sources, the corpus transcripts and a
/// sample of its captions, then trains and scores the classifier.
pub fn train_classifier_on(corpus: &Corpus, req: &ClassifierTrainRequest) -> Result<ClassifierTrainOutcome> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let quotes = match &req.quote_sources {
        Some(q) => q.clone(),
        None => synth_quote_sources(req.n_quote_sources, req.quote_vocab, req.seed),
    };
    let transcripts: Vec<String> = corpus.transcripts().values().cloned().collect();
    let captions: Vec<String> = original_captions(corpus).into_iter().map(|a| a.text).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(req.seed.wrapping_add(1));
    let captions: Vec<String> = captions
        .choose_multiple(&mut rng, req.n_captions.min(captions.len()))
        .cloned()
        .collect();
    let labeled = build_training_set(
        &QuoteRuleSet::standard(),
        &quotes,
        &transcripts,
        &captions,
        req.seed.wrapping_add(2),
    )?;
    let cfg = ClassifierConfig {
        epochs: req.epochs,
        learning_rate: req.learning_rate,
        seed: req.seed.wrapping_add(3),
        ..Default::default()
    };
    let (model, curve) = train_classifier(&labeled.train, &cfg)?;
    let metrics = evaluate_classifier(&model, &labeled.test)?;
    Ok(ClassifierTrainOutcome {
        model: Some(model),
        n_train: labeled.train.len(),
        n_test: labeled.test.len(),
        rejected_quote_sources: labeled.rejected_quote_sources,
        warnings: labeled.warnings,
        metrics,
        curve,
    })
}

/// Full-text index over every non-empty transcript in the corpus.
pub fn build_index_on(corpus: &Corpus, params: Bm25Params) -> Result<InvertedIndex> {
    let docs: Vec<TranscriptDoc> = corpus
        .transcripts()
        .iter()
        .map(|(clip_id, text)| TranscriptDoc {
            clip_id: clip_id.clone(),
            text: text.clone(),
        })
        .collect();
    InvertedIndex::build(&docs, params)
}
