//! The end-to-end experiment: split, build the customised sets, train both
//! embedding models and the query classifier, then compare the three
//! retrieval methods on the original and mixed test sets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    build_training_set, evaluate_classifier, train_classifier, ClassifierConfig, ClassifierMetrics, LabeledSet,
    QuoteRuleSet, SequenceClassifier, TrainingCurve,
};
use crate::corpus::{
    build_customised_test, build_customised_train, make_split, synth_quote_sources, Annotation, AnnotationKind,
    Corpus, CustomisedTest, DatasetSplit, Origin,
};
use crate::embedding::{train, EmbeddingIndex, ModelConfig, TrainConfig, TrainReport, TwoTowerModel};
use crate::error::{Error, Result};
use crate::eval::{check_orderings, compare, ComparisonTable, MethodEntry, MetricReport, OrderingCheck, TestSet};
use crate::router::{RetrievalMethod, RoutingPolicy};
use crate::textsearch::{Bm25Params, InvertedIndex, TranscriptDoc};

pub const ORIGINAL_SET: &str = "original";
pub const MIXED_SET: &str = "mixed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub train_fraction: f64,
    pub replace_max: usize,
    pub mixed_fraction: f64,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub classifier: ClassifierConfig,
    pub bm25: Bm25Params,
    /// Synthetic quote sentences added to the quote class.
    pub n_quote_sources: usize,
    /// Speech vocabulary the synthetic quote sentences draw from.
    pub quote_vocab: usize,
    pub max_classifier_transcripts: usize,
    pub n_classifier_captions: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            train_fraction: 0.8,
            replace_max: 3,
            mixed_fraction: 0.5,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            classifier: ClassifierConfig::default(),
            bm25: Bm25Params::default(),
            n_quote_sources: 2000,
            quote_vocab: 200,
            max_classifier_transcripts: 1000,
            n_classifier_captions: 2000,
        }
    }
}

/// Seeds for each randomized stage, all derived from the base seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub split: u64,
    pub customise_train: u64,
    pub customise_test: u64,
    pub model_init: u64,
    pub embedding_train: u64,
    pub quote_sources: u64,
    pub caption_sample: u64,
    pub labeled_split: u64,
    pub classifier: u64,
}

impl StageSeeds {
    pub fn derive(base: u64) -> Self {
        let s = |k: u64| base.wrapping_mul(1_000_003).wrapping_add(k);
        Self {
            split: s(1),
            customise_train: s(2),
            customise_test: s(3),
            model_init: s(4),
            embedding_train: s(5),
            quote_sources: s(6),
            caption_sample: s(7),
            labeled_split: s(8),
            classifier: s(9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedSummary {
    pub requested: usize,
    pub replaced: usize,
    pub shortfall: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub n_pairs: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

impl From<&TrainReport> for TrainingSummary {
    fn from(r: &TrainReport) -> Self {
        Self {
            n_pairs: r.n_pairs,
            initial_loss: r.initial_loss,
            final_loss: r.final_loss,
        }
    }
}

/// Everything written to `report.json`. Maps are ordered so the
/// serialization is byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub pool_size: usize,
    pub n_test_pairs: usize,
    pub mixed: MixedSummary,
    pub training: BTreeMap<String, TrainingSummary>,
    pub trained_on: BTreeMap<String, String>,
    pub results: BTreeMap<String, BTreeMap<String, MetricReport>>,
    pub classifier: ClassifierMetrics,
    pub orderings: Vec<OrderingCheck>,
}

impl EvalReport {
    pub fn all_orderings_hold(&self) -> bool {
        self.orderings.iter().all(|o| o.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub struct PipelineOutput {
    pub split: DatasetSplit,
    pub mixed: CustomisedTest,
    pub baseline_train: Vec<Annotation>,
    pub customised_train: Vec<Annotation>,
    pub baseline: Arc<TwoTowerModel>,
    pub customised: Arc<TwoTowerModel>,
    pub labeled: LabeledSet,
    pub classifier: Arc<SequenceClassifier>,
    pub classifier_curve: TrainingCurve,
    pub fulltext: Arc<InvertedIndex>,
    pub table: ComparisonTable,
    pub report: EvalReport,
}

/// Original captions of the training clips.
pub fn baseline_annotations(corpus: &Corpus, split: &DatasetSplit) -> Vec<Annotation> {
    corpus
        .annotations()
        .iter()
        .filter(|a| {
            a.kind == AnnotationKind::Caption && a.origin == Origin::Original && split.train_clip_ids.contains(&a.clip_id)
        })
        .cloned()
        .collect()
}

/// Classifier inputs drawn from the training side only: transcripts of
/// training clips and a sample of training captions.
pub fn classifier_inputs(
    corpus: &Corpus,
    split: &DatasetSplit,
    max_transcripts: usize,
    n_captions: usize,
    seed: u64,
) -> (Vec<String>, Vec<String>) {
    let transcripts: Vec<String> = corpus
        .clips()
        .iter()
        .filter(|c| split.train_clip_ids.contains(&c.clip_id))
        .filter_map(|c| corpus.transcript(&c.clip_id).map(str::to_owned))
        .take(max_transcripts)
        .collect();
    let captions: Vec<String> = baseline_annotations(corpus, split).into_iter().map(|a| a.text).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampled = captions
        .choose_multiple(&mut rng, n_captions.min(captions.len()))
        .cloned()
        .collect();
    (transcripts, sampled)
}

pub fn run_pipeline(corpus: &Corpus, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let seeds = StageSeeds::derive(cfg.seed);
    let video_dim = corpus
        .video_dim()
        .ok_or_else(|| Error::validation("corpus has no video features"))?;

    let split = make_split(corpus, cfg.train_fraction, seeds.split)?;
    let mixed = build_customised_test(corpus, &split.test_pairs, cfg.mixed_fraction, seeds.customise_test)?;
    let baseline_train = baseline_annotations(corpus, &split);
    let customised_train = build_customised_train(corpus, &split, cfg.replace_max, seeds.customise_train)?;

    let init = TwoTowerModel::init(&cfg.model, video_dim, seeds.model_init)?;
    let train_cfg = TrainConfig {
        seed: seeds.embedding_train,
        ..cfg.train.clone()
    };
    let (baseline, baseline_report) = train(init.clone(), &baseline_train, corpus, &train_cfg)?;
    let (customised, customised_report) = train(init, &customised_train, corpus, &train_cfg)?;
    let baseline = Arc::new(baseline);
    let customised = Arc::new(customised);

    let pool_ids = split.test_clip_ids();
    let pool = corpus.subset(&pool_ids);
    let pool_features = pool.features();
    let pool_docs: Vec<TranscriptDoc> = pool
        .transcripts()
        .iter()
        .map(|(id, text)| TranscriptDoc {
            clip_id: id.clone(),
            text: text.clone(),
        })
        .collect();
    let fulltext = Arc::new(InvertedIndex::build(&pool_docs, cfg.bm25)?);

    let quote_sources = synth_quote_sources(cfg.n_quote_sources, cfg.quote_vocab, seeds.quote_sources);
    let (transcripts, captions) = classifier_inputs(
        corpus,
        &split,
        cfg.max_classifier_transcripts,
        cfg.n_classifier_captions,
        seeds.caption_sample,
    );
    let labeled = build_training_set(
        &QuoteRuleSet::standard(),
        &quote_sources,
        &transcripts,
        &captions,
        seeds.labeled_split,
    )?;
    let classifier_cfg = ClassifierConfig {
        seed: seeds.classifier,
        ..cfg.classifier.clone()
    };
    let (classifier, classifier_curve) = train_classifier(&labeled.train, &classifier_cfg)?;
    let classifier_metrics = evaluate_classifier(&classifier, &labeled.test)?;
    let classifier = Arc::new(classifier);

    let base_index = Arc::new(EmbeddingIndex::build(baseline.clone(), &pool_features)?);
    let cust_index = Arc::new(EmbeddingIndex::build(customised.clone(), &pool_features)?);
    let m_base = RetrievalMethod::baseline(base_index.clone());
    let m_cust = RetrievalMethod::customised(cust_index);
    let m_cls =
        RetrievalMethod::classifier_enhanced(base_index, fulltext.clone(), RoutingPolicy::Classifier(classifier.clone()));

    let methods = [
        MethodEntry {
            label: "baseline".into(),
            trained_on: "original".into(),
            retriever: &m_base,
        },
        MethodEntry {
            label: "customised".into(),
            trained_on: "customised".into(),
            retriever: &m_cust,
        },
        MethodEntry {
            label: "classifier".into(),
            trained_on: "original".into(),
            retriever: &m_cls,
        },
    ];
    let sets = [
        TestSet {
            label: ORIGINAL_SET.into(),
            pairs: &split.test_pairs,
        },
        TestSet {
            label: MIXED_SET.into(),
            pairs: &mixed.pairs,
        },
    ];
    let pool_size = pool.len();
    let table = compare(&methods, &sets, pool_size)?;
    let orderings = check_orderings(&table, ORIGINAL_SET, MIXED_SET)?;

    let report = EvalReport {
        seed: cfg.seed,
        pool_size,
        n_test_pairs: split.test_pairs.len(),
        mixed: MixedSummary {
            requested: mixed.requested,
            replaced: mixed.replaced,
            shortfall: mixed.shortfall,
        },
        training: BTreeMap::from([
            ("baseline".to_owned(), TrainingSummary::from(&baseline_report)),
            ("customised".to_owned(), TrainingSummary::from(&customised_report)),
        ]),
        trained_on: table.rows.iter().map(|r| (r.method.clone(), r.trained_on.clone())).collect(),
        results: table.nested(),
        classifier: classifier_metrics,
        orderings,
    };

    Ok(PipelineOutput {
        split,
        mixed,
        baseline_train,
        customised_train,
        baseline,
        customised,
        labeled,
        classifier,
        classifier_curve,
        fulltext,
        table,
        report,
    })
}

/// Human-readable report: the comparison table, classifier accuracy and the
/// ordering checks.
pub fn render_report_text(table: &ComparisonTable, report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "seed {}  pool {} clips  {} test queries  mixed: {} of {} requested replaced",
        report.seed, report.pool_size, report.n_test_pairs, report.mixed.replaced, report.mixed.requested
    );
    out.push('\n');
    out.push_str(&table.render_text());
    out.push('\n');
    let c = &report.classifier;
    let _ = writeln!(
        out,
        "query classifier: accuracy {:.4} ({}/{})  quote recall {:.4}  visual recall {:.4}",
        c.accuracy, c.correct, c.n, c.quote_speech.recall, c.visual.recall
    );
    out.push('\n');
    for o in &report.orderings {
        let _ = writeln!(
            out,
            "[{}] {}  ({:.4} vs {:.4})",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.lhs,
            o.rhs
        );
    }
    out
}
