//! JSON-over-HTTP front end for the engine and the feedback stores.
//!
//! Reads take a snapshot of the current engine and never block each other.
//! Mutations run one at a time behind a writer gate; expensive work (training,
//! evaluation) happens on a snapshot outside every lock and the result is
//! swapped in at the end, so a failed request changes nothing.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{Annotation, Clip, FeatureRecord};
use crate::engine::{
    build_index_on, train_classifier_on, train_embedding_on, ClassifierTrainRequest, EmbeddingTrainRequest, Engine,
};
use crate::error::Error;
use crate::feedback::{AspectVote, FeedbackStore, Rating};
use crate::pipeline::{run_pipeline, PipelineConfig};
use crate::textsearch::{Bm25Params, TranscriptDoc};

pub const ADDR_ENV: &str = "CLIPSEEK_ADDR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ApiErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ApiErrorBody {
                error: code.to_owned(),
                message: message.into(),
            },
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::Validation(_) | Error::DimensionMismatch { .. } => (StatusCode::BAD_REQUEST, "validation"),
            Error::Json(_) | Error::Parse { .. } => (StatusCode::BAD_REQUEST, "invalid_body"),
            Error::Unencodable => (StatusCode::UNPROCESSABLE_ENTITY, "unencodable"),
            Error::UnknownMethod(_) => (StatusCode::NOT_FOUND, "unknown_method"),
            Error::NotBound(_) => (StatusCode::CONFLICT, "no_method_bound"),
            Error::Config(_) => (StatusCode::CONFLICT, "configuration"),
            Error::Diverged { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "diverged"),
            Error::Io { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Parses a JSON body; an empty body means `T::default()` where allowed.
fn parse_body<T: DeserializeOwned>(body: &Bytes, empty: Option<T>) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        if let Some(d) = empty {
            return Ok(d);
        }
    }
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.to_string()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, Error> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

pub struct Shared {
    engine: RwLock<Arc<Engine>>,
    feedback: Mutex<FeedbackStore>,
    writer: tokio::sync::Mutex<()>,
    report_config: PipelineConfig,
}

#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    pub fn new(engine: Engine, feedback: FeedbackStore) -> Self {
        Self::with_report_config(engine, feedback, PipelineConfig::default())
    }

    /// `report_config` drives `/eval/report` when no report was loaded.
    pub fn with_report_config(engine: Engine, feedback: FeedbackStore, report_config: PipelineConfig) -> Self {
        AppState(Arc::new(Shared {
            engine: RwLock::new(Arc::new(engine)),
            feedback: Mutex::new(feedback),
            writer: tokio::sync::Mutex::new(()),
            report_config,
        }))
    }

    pub fn engine(&self) -> Arc<Engine> {
        self.0.engine.read().expect("engine lock poisoned").clone()
    }

    fn swap(&self, next: Engine) {
        *self.0.engine.write().expect("engine lock poisoned") = Arc::new(next);
    }

    fn feedback(&self) -> std::sync::MutexGuard<'_, FeedbackStore> {
        self.0.feedback.lock().expect("feedback lock poisoned")
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/search", get(search))
        .route("/ingest/{kind}", post(ingest))
        .route("/train/embedding", post(train_embedding))
        .route("/train/classifier", post(train_classifier))
        .route("/index/build", post(build_index))
        .route("/rate", post(rate))
        .route("/vote", post(vote))
        .route("/summary/ratings", get(ratings_summary))
        .route("/summary/votes", get(votes_summary))
        .route("/eval/report", get(eval_report))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn health(State(s): State<AppState>) -> Json<crate::engine::Health> {
    Json(s.engine().health())
}

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    pub q: Option<String>,
    pub method: Option<String>,
    pub k: Option<String>,
}

async fn search(
    State(s): State<AppState>,
    Query(p): Query<SearchParams>,
) -> ApiResult<crate::engine::SearchResponse> {
    let bad = |m: &str| ApiError::new(StatusCode::BAD_REQUEST, "validation", m);
    let q = p.q.ok_or_else(|| bad("missing query parameter q"))?;
    let method = p.method.ok_or_else(|| bad("missing query parameter method"))?;
    let k = match p.k {
        None => None,
        Some(k) => Some(k.parse::<usize>().map_err(|_| bad("k must be a non-negative integer"))?),
    };
    Ok(Json(s.engine().search(&method, &q, k)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestAck {
    pub ingested: usize,
    pub corpus_size: usize,
}

async fn ingest(State(s): State<AppState>, Path(kind): Path<String>, body: Bytes) -> ApiResult<IngestAck> {
    let _gate = s.0.writer.lock().await;
    let engine = s.engine();
    let (n, next) = match kind.as_str() {
        "clips" => {
            let v: Vec<Clip> = parse_body(&body, None)?;
            (v.len(), engine.ingest_clips(v)?)
        }
        "annotations" => {
            let v: Vec<Annotation> = parse_body(&body, None)?;
            (v.len(), engine.ingest_annotations(v)?)
        }
        "features" => {
            let v: Vec<FeatureRecord> = parse_body(&body, None)?;
            (v.len(), engine.ingest_features(v)?)
        }
        "transcripts" => {
            let v: Vec<TranscriptDoc> = parse_body(&body, None)?;
            (v.len(), engine.ingest_transcripts(v)?)
        }
        other => {
            return Err(ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_record_kind",
                format!("cannot ingest {other:?}"),
            ))
        }
    };
    let corpus_size = next.corpus().len();
    s.swap(next);
    Ok(Json(IngestAck {
        ingested: n,
        corpus_size,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTrainAck {
    pub method: String,
    pub n_pairs: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epoch_losses: Vec<f64>,
    pub bound: Vec<String>,
}

async fn train_embedding(State(s): State<AppState>, body: Bytes) -> ApiResult<EmbeddingTrainAck> {
    let req: EmbeddingTrainRequest = parse_body(&body, Some(EmbeddingTrainRequest::default()))?;
    let _gate = s.0.writer.lock().await;
    let corpus = s.engine().corpus_arc();
    let kind = req.method;
    let (model, report) = blocking(move || train_embedding_on(&corpus, &req)).await?;
    let next = s.engine().bind_model(kind, model)?;
    let bound = next.bound_methods();
    s.swap(next);
    Ok(Json(EmbeddingTrainAck {
        method: kind.label().to_owned(),
        n_pairs: report.n_pairs,
        initial_loss: report.initial_loss,
        final_loss: report.final_loss,
        epoch_losses: report.epoch_losses,
        bound,
    }))
}

async fn train_classifier(
    State(s): State<AppState>,
    body: Bytes,
) -> ApiResult<crate::engine::ClassifierTrainOutcome> {
    let req: ClassifierTrainRequest = parse_body(&body, Some(ClassifierTrainRequest::default()))?;
    let _gate = s.0.writer.lock().await;
    let corpus = s.engine().corpus_arc();
    let mut outcome = blocking(move || train_classifier_on(&corpus, &req)).await?;
    let model = outcome.model.take().expect("training returns a model");
    s.swap(s.engine().bind_classifier(model)?);
    Ok(Json(outcome))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexAck {
    pub n_docs: usize,
    pub n_terms: usize,
}

async fn build_index(State(s): State<AppState>, body: Bytes) -> ApiResult<IndexAck> {
    let params: Bm25Params = parse_body(&body, Some(Bm25Params::default()))?;
    let _gate = s.0.writer.lock().await;
    let corpus = s.engine().corpus_arc();
    let index = blocking(move || build_index_on(&corpus, params)).await?;
    let ack = IndexAck {
        n_docs: index.n_docs,
        n_terms: index.postings.len(),
    };
    s.swap(s.engine().bind_index(index)?);
    Ok(Json(ack))
}

async fn rate(State(s): State<AppState>, body: Bytes) -> ApiResult<crate::feedback::Ack> {
    let r: Rating = parse_body(&body, None)?;
    Ok(Json(s.feedback().rate(r)?))
}

async fn vote(State(s): State<AppState>, body: Bytes) -> ApiResult<crate::feedback::Ack> {
    let v: AspectVote = parse_body(&body, None)?;
    Ok(Json(s.feedback().vote(v)?))
}

async fn ratings_summary(State(s): State<AppState>) -> Json<crate::feedback::RatingsSummary> {
    Json(s.feedback().ratings_summary())
}

async fn votes_summary(State(s): State<AppState>) -> Json<crate::feedback::VotesSummary> {
    Json(s.feedback().votes_summary())
}

/// The loaded report, or one computed by the reference pipeline on the
/// current corpus and cached until the corpus changes.
async fn eval_report(State(s): State<AppState>) -> ApiResult<crate::pipeline::EvalReport> {
    if let Some(r) = s.engine().report() {
        return Ok(Json((**r).clone()));
    }
    let _gate = s.0.writer.lock().await;
    if let Some(r) = s.engine().report() {
        return Ok(Json((**r).clone()));
    }
    let corpus = s.engine().corpus_arc();
    let cfg = s.0.report_config.clone();
    let report = blocking(move || run_pipeline(&corpus, &cfg).map(|o| o.report)).await?;
    s.swap(s.engine().with_report(report.clone()));
    Ok(Json(report))
}

/// Where the service finds its artifacts and writes feedback.
#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// `methods.json`; when absent the engine starts from `corpus_dir` with
    /// nothing bound.
    pub methods: Option<PathBuf>,
    pub corpus_dir: Option<PathBuf>,
    /// Feedback logs go here; in memory when absent.
    pub feedback_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn load_state(&self, report_config: PipelineConfig) -> crate::Result<AppState> {
        let engine = match (&self.methods, &self.corpus_dir) {
            (Some(m), _) => {
                if !m.exists() {
                    return Err(Error::Config(format!("missing artifact: {}", m.display())));
                }
                Engine::open(m)?
            }
            (None, Some(dir)) => Engine::new(crate::corpus::Corpus::load_dir(dir)?),
            (None, None) => Engine::default(),
        };
        let feedback = match &self.feedback_dir {
            Some(d) => FeedbackStore::open_dir(d)?,
            None => FeedbackStore::in_memory(),
        };
        Ok(AppState::with_report_config(engine, feedback, report_config))
    }
}
