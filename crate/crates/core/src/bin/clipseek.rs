//! Command-line driver. Every subcommand works against one data directory:
//!
//! ```text
//! <dir>/corpus/            clips, annotations, transcripts, features
//! <dir>/split.json
//! <dir>/train_customised.jsonl
//! <dir>/pairs_original.jsonl, pairs_mixed.jsonl
//! <dir>/models/{baseline,customised,classifier}.json
//! <dir>/index.json
//! <dir>/methods.json       bindings read by `search` and `serve`
//! <dir>/report.json, report.txt
//! ```

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use clipseek::classifier::{
    build_training_set, evaluate_classifier, train_classifier, ClassifierConfig, QuoteRuleSet, SequenceClassifier,
};
use clipseek::corpus::io::{read_json, read_jsonl, write_json, write_jsonl};
use clipseek::corpus::{
    build_customised_test, build_customised_train, group_shot_records, make_split, synth_corpus,
    synth_quote_sources, Annotation, Clip, Corpus, DatasetSplit, FeatureRecord, ShotRecord,
    SynthConfig, MIN_CLIP_SECONDS,
};
use clipseek::embedding::{train, ModelConfig, TrainConfig, TwoTowerModel};
use clipseek::engine::{
    build_index_on, train_classifier_on, train_embedding_on, BindingConfig, ClassifierTrainRequest,
    EmbeddingTrainRequest, Engine, MethodBinding, METHODS_FILE,
};
use clipseek::pipeline::{baseline_annotations, classifier_inputs, render_report_text, run_pipeline, PipelineConfig};
use clipseek::router::MethodKind;
use clipseek::service::{serve, ServiceConfig, ADDR_ENV, DEFAULT_ADDR};
use clipseek::textsearch::{Bm25Params, TranscriptDoc};
use clipseek::{Error, Result};

const CORPUS_DIR: &str = "corpus";
const SPLIT_FILE: &str = "split.json";
const CUSTOM_TRAIN_FILE: &str = "train_customised.jsonl";
const PAIRS_ORIGINAL_FILE: &str = "pairs_original.jsonl";
const PAIRS_MIXED_FILE: &str = "pairs_mixed.jsonl";
const INDEX_FILE: &str = "index.json";
const REPORT_JSON: &str = "report.json";
const REPORT_TXT: &str = "report.txt";

#[derive(Parser)]
#[command(name = "clipseek", version, about = "Text-to-video clip retrieval with query-type routing")]
struct Cli {
    /// Data directory shared by all subcommands.
    #[arg(long, global = true, env = "CLIPSEEK_DIR", default_value = "clipseek-data")]
    dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus.
    Synth {
        #[arg(long, default_value_t = 200)]
        clips: usize,
        #[arg(long, default_value_t = 100)]
        visual_vocab: usize,
        #[arg(long, default_value_t = 200)]
        speech_vocab: usize,
        #[arg(long, default_value_t = 0.6)]
        coverage: f64,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Add records from JSONL files to the corpus.
    Ingest {
        #[arg(long)]
        clips: Option<PathBuf>,
        /// Shot boundaries to group into clips.
        #[arg(long)]
        shots: Option<PathBuf>,
        #[arg(long, default_value_t = MIN_CLIP_SECONDS)]
        min_duration: f64,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        transcripts: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Partition clips into train and test and draw test pairs.
    Split {
        #[arg(long, default_value_t = 0.8)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build the transcript-customised training annotations.
    CustomiseTrain {
        #[arg(long, default_value_t = 3)]
        replace_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build the mixed test set.
    CustomiseTest {
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train an embedding model (baseline or customised).
    TrainEmbedding {
        #[arg(long, default_value = "baseline")]
        method: String,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train the query-type classifier.
    TrainClassifier {
        #[arg(long, default_value_t = 7)]
        epochs: usize,
        #[arg(long, default_value_t = 2000)]
        quote_sources: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build the transcript full-text index.
    BuildIndex {
        #[arg(long, default_value_t = 1.2)]
        k1: f64,
        #[arg(long, default_value_t = 0.75)]
        b: f64,
    },
    /// Query a bound method.
    Search {
        #[arg(long, default_value = "classifier")]
        method: String,
        #[arg(long)]
        q: String,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Print the JSON response instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run the reference experiment and write report.json / report.txt.
    Eval {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        /// Exit with status 2 when an expected ordering fails.
        #[arg(long)]
        assert_orderings: bool,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, env = ADDR_ENV, default_value = DEFAULT_ADDR)]
        addr: SocketAddr,
        /// Where ratings and votes are logged; in memory when omitted.
        #[arg(long)]
        feedback_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

enum Outcome {
    Ok,
    OrderingFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::OrderingFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn make_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn corpus_dir(dir: &Path) -> PathBuf {
    dir.join(CORPUS_DIR)
}

fn load_corpus(dir: &Path) -> Result<Corpus> {
    Corpus::load_dir(&corpus_dir(dir))
}

fn load_split(dir: &Path) -> Result<DatasetSplit> {
    let p = dir.join(SPLIT_FILE);
    if !p.exists() {
        return Err(Error::Validation(format!("{} not found; run `split` first", p.display())));
    }
    read_json(&p)
}

/// Rewrites `methods.json` to bind whatever artifacts exist.
fn refresh_bindings(dir: &Path) -> Result<()> {
    let rel = |p: &str| PathBuf::from(p);
    let has = |p: &str| dir.join(p).exists();
    let mut cfg = BindingConfig {
        corpus: rel(CORPUS_DIR),
        ..Default::default()
    };
    for kind in [MethodKind::Baseline, MethodKind::Customised] {
        let model = format!("models/{}.json", kind.label());
        if has(&model) {
            cfg.methods.insert(
                kind.label().into(),
                MethodBinding {
                    model: rel(&model),
                    ..Default::default()
                },
            );
        }
    }
    if has("models/baseline.json") && has(INDEX_FILE) {
        cfg.methods.insert(
            MethodKind::ClassifierEnhanced.label().into(),
            MethodBinding {
                model: rel("models/baseline.json"),
                classifier: has("models/classifier.json").then(|| rel("models/classifier.json")),
                index: Some(rel(INDEX_FILE)),
            },
        );
    }
    if has(REPORT_JSON) {
        cfg.report = Some(rel(REPORT_JSON));
    }
    write_json(&dir.join(METHODS_FILE), &cfg)
}

fn run(cli: Cli) -> Result<Outcome> {
    let dir = cli.dir;
    match cli.command {
        Command::Synth {
            clips,
            visual_vocab,
            speech_vocab,
            coverage,
            noise,
            seed,
        } => {
            let corpus = synth_corpus(&SynthConfig {
                n_clips: clips,
                visual_vocab,
                speech_vocab,
                transcript_coverage: coverage,
                noise_sigma: noise,
                seed,
                ..Default::default()
            })?;
            corpus.save_dir(&corpus_dir(&dir))?;
            println!(
                "wrote {} clips, {} annotations, {} transcripts to {}",
                corpus.len(),
                corpus.annotations().len(),
                corpus.transcripts().len(),
                corpus_dir(&dir).display()
            );
        }
        Command::Ingest {
            clips,
            shots,
            min_duration,
            annotations,
            transcripts,
            features,
        } => {
            let cdir = corpus_dir(&dir);
            let mut corpus = if cdir.join(clipseek::corpus::io::CLIPS_FILE).exists() {
                Corpus::load_dir(&cdir)?
            } else {
                Corpus::default()
            };
            if let Some(p) = clips {
                corpus.add_clips(read_jsonl::<Clip>(&p)?)?;
            }
            if let Some(p) = shots {
                corpus.add_clips(group_shot_records(&read_jsonl::<ShotRecord>(&p)?, min_duration)?)?;
            }
            if let Some(p) = annotations {
                corpus.add_annotations(read_jsonl::<Annotation>(&p)?)?;
            }
            if let Some(p) = transcripts {
                corpus.add_transcripts(read_jsonl::<TranscriptDoc>(&p)?)?;
            }
            if let Some(p) = features {
                corpus.set_features(read_jsonl::<FeatureRecord>(&p)?)?;
            }
            corpus.save_dir(&cdir)?;
            println!("corpus now has {} clips", corpus.len());
        }
        Command::Split { fraction, seed } => {
            let corpus = load_corpus(&dir)?;
            let split = make_split(&corpus, fraction, seed)?;
            write_json(&dir.join(SPLIT_FILE), &split)?;
            write_jsonl(&dir.join(PAIRS_ORIGINAL_FILE), &split.test_pairs)?;
            println!(
                "{} training clips, {} test pairs",
                split.train_clip_ids.len(),
                split.test_pairs.len()
            );
        }
        Command::CustomiseTrain { replace_max, seed } => {
            let corpus = load_corpus(&dir)?;
            let split = load_split(&dir)?;
            let anns = build_customised_train(&corpus, &split, replace_max, seed)?;
            let replaced = anns
                .iter()
                .filter(|a| a.origin == clipseek::corpus::Origin::Replacement)
                .count();
            write_jsonl(&dir.join(CUSTOM_TRAIN_FILE), &anns)?;
            println!("{} annotations, {replaced} replaced by transcripts", anns.len());
        }
        Command::CustomiseTest { fraction, seed } => {
            let corpus = load_corpus(&dir)?;
            let split = load_split(&dir)?;
            let mixed = build_customised_test(&corpus, &split.test_pairs, fraction, seed)?;
            write_jsonl(&dir.join(PAIRS_MIXED_FILE), &mixed.pairs)?;
            println!(
                "{} pairs: {} of {} requested replaced (shortfall {})",
                mixed.pairs.len(),
                mixed.replaced,
                mixed.requested,
                mixed.shortfall
            );
        }
        Command::TrainEmbedding {
            method,
            epochs,
            lr,
            batch_size,
            seed,
        } => {
            let kind: MethodKind = method.parse()?;
            let corpus = load_corpus(&dir)?;
            let (model, report) = if dir.join(SPLIT_FILE).exists() {
                let split = load_split(&dir)?;
                let anns = match kind {
                    MethodKind::Baseline => baseline_annotations(&corpus, &split),
                    MethodKind::Customised => {
                        let p = dir.join(CUSTOM_TRAIN_FILE);
                        if !p.exists() {
                            return Err(Error::Validation(format!(
                                "{} not found; run `customise-train` first",
                                p.display()
                            )));
                        }
                        read_jsonl(&p)?
                    }
                    MethodKind::ClassifierEnhanced => {
                        return Err(Error::Validation(
                            "the classifier method reuses the baseline model".into(),
                        ))
                    }
                };
                let video_dim = corpus
                    .video_dim()
                    .ok_or_else(|| Error::Validation("corpus has no video features".into()))?;
                let init = TwoTowerModel::init(&ModelConfig::default(), video_dim, seed)?;
                let cfg = TrainConfig {
                    learning_rate: lr,
                    epochs,
                    batch_size,
                    seed,
                };
                train(init, &anns, &corpus, &cfg)?
            } else {
                let req = EmbeddingTrainRequest {
                    method: kind,
                    epochs,
                    learning_rate: lr,
                    batch_size,
                    seed,
                    ..Default::default()
                };
                train_embedding_on(&corpus, &req)?
            };
            let path = dir.join(format!("models/{}.json", kind.label()));
            make_dir(&dir.join("models"))?;
            model.save_json(&path)?;
            refresh_bindings(&dir)?;
            println!(
                "{kind}: {} pairs, loss {:.4} -> {:.4}, saved {}",
                report.n_pairs,
                report.initial_loss,
                report.final_loss,
                path.display()
            );
        }
        Command::TrainClassifier {
            epochs,
            quote_sources,
            seed,
        } => {
            let corpus = load_corpus(&dir)?;
            let (model, metrics) = if dir.join(SPLIT_FILE).exists() {
                let split = load_split(&dir)?;
                let quotes = synth_quote_sources(quote_sources, 200, seed);
                let (transcripts, captions) = classifier_inputs(&corpus, &split, 1000, 2000, seed.wrapping_add(1));
                let labeled = build_training_set(
                    &QuoteRuleSet::standard(),
                    &quotes,
                    &transcripts,
                    &captions,
                    seed.wrapping_add(2),
                )?;
                let cfg = ClassifierConfig {
                    epochs,
                    seed: seed.wrapping_add(3),
                    ..Default::default()
                };
                let (model, _) = train_classifier(&labeled.train, &cfg)?;
                let metrics = evaluate_classifier(&model, &labeled.test)?;
                (model, metrics)
            } else {
                let req = ClassifierTrainRequest {
                    seed,
                    epochs,
                    n_quote_sources: quote_sources,
                    ..Default::default()
                };
                let mut out = train_classifier_on(&corpus, &req)?;
                (out.model.take().expect("trained"), out.metrics)
            };
            let path = dir.join("models/classifier.json");
            make_dir(&dir.join("models"))?;
            SequenceClassifier::save_json(&model, &path)?;
            refresh_bindings(&dir)?;
            println!(
                "held-out accuracy {:.4} ({}/{}), saved {}",
                metrics.accuracy,
                metrics.correct,
                metrics.n,
                path.display()
            );
        }
        Command::BuildIndex { k1, b } => {
            let corpus = load_corpus(&dir)?;
            let index = build_index_on(&corpus, Bm25Params { k1, b })?;
            write_json(&dir.join(INDEX_FILE), &index)?;
            refresh_bindings(&dir)?;
            println!("indexed {} transcripts, {} terms", index.n_docs, index.postings.len());
        }
        Command::Search { method, q, k, json } => {
            let engine = Engine::open(&dir.join(METHODS_FILE))?;
            let resp = engine.search(&method, &q, Some(k))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&resp)?);
            } else {
                match &resp.decided_class {
                    Some(c) => println!(
                        "{} -> {} ({} {:.3})",
                        resp.method,
                        resp.backend.as_str(),
                        c.label.as_str(),
                        c.confidence
                    ),
                    None => println!("{} -> {}", resp.method, resp.backend.as_str()),
                }
                for h in &resp.results {
                    println!(
                        "{:>3}  {:<12} {:>9.4}  [{}]  {:.1}-{:.1}s  {}",
                        h.rank,
                        h.clip_id,
                        h.score,
                        h.backend.as_str(),
                        h.start_s,
                        h.end_s,
                        h.caption_preview.as_deref().unwrap_or("")
                    );
                }
            }
        }
        Command::Eval {
            seed,
            epochs,
            lr,
            assert_orderings,
        } => {
            let corpus = load_corpus(&dir)?;
            let mut cfg = PipelineConfig {
                seed,
                ..Default::default()
            };
            cfg.train.epochs = epochs;
            cfg.train.learning_rate = lr;
            let out = run_pipeline(&corpus, &cfg)?;
            let text = render_report_text(&out.table, &out.report);
            write_file(&dir.join(REPORT_JSON), &out.report.to_json()?)?;
            write_file(&dir.join(REPORT_TXT), &text)?;
            print!("{text}");
            if assert_orderings && !out.report.all_orderings_hold() {
                eprintln!("ordering assertion failed");
                return Ok(Outcome::OrderingFailed);
            }
        }
        Command::Serve {
            addr,
            feedback_dir,
            seed,
        } => {
            let methods = dir.join(METHODS_FILE);
            let config = ServiceConfig {
                methods: methods.exists().then_some(methods),
                corpus_dir: Some(corpus_dir(&dir)),
                feedback_dir,
            };
            let state = config.load_state(PipelineConfig {
                seed,
                ..Default::default()
            })?;
            let at = PathBuf::from(addr.to_string());
            let rt = tokio::runtime::Runtime::new().map_err(|e| io_err(&at, e))?;
            rt.block_on(serve(state, addr)).map_err(|e| io_err(&at, e))?;
        }
    }
    Ok(Outcome::Ok)
}
