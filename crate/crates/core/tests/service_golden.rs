//! Scripted session against the HTTP router; every response is compared with
//! a golden file under `tests/golden/service`. Set `UPDATE_GOLDEN=1` to
//! rewrite them.

use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use clipseek::classifier::ClassifierConfig;
use clipseek::corpus::{synth_corpus, Corpus, SynthConfig};
use clipseek::embedding::TrainConfig;
use clipseek::engine::Engine;
use clipseek::feedback::{FailingSink, FeedbackStore};
use clipseek::pipeline::PipelineConfig;
use clipseek::service::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/service")
}

/// Non-integer numbers from training and scoring depend on floating-point
/// details, so the golden files keep only their presence. Summary values are
/// exact and kept.
fn redact(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => *v = Value::String("<real>".into()),
        Value::Array(a) => a.iter_mut().for_each(redact),
        Value::Object(o) => o.values_mut().for_each(redact),
        _ => {}
    }
}

struct Session {
    app: Router,
    steps: usize,
}

impl Session {
    fn new(state: AppState) -> Self {
        Self {
            app: router(state),
            steps: 0,
        }
    }

    async fn call(&mut self, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.map_or_else(Body::empty, Body::from))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        (status, value)
    }

    /// Issues a request and checks it against `golden/service/<name>.json`.
    async fn step(&mut self, name: &str, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        self.steps += 1;
        let (status, value) = self.call(method, uri, body.map(|b| b.to_string())).await;
        let mut shown = value.clone();
        if !uri.starts_with("/summary") {
            redact(&mut shown);
        }
        let record = json!({
            "request": format!("{method} {}", uri.split('?').next().unwrap()),
            "status": status.as_u16(),
            "body": shown,
        });
        let path = golden_dir().join(format!("{name}.json"));
        let text = serde_json::to_string_pretty(&record).unwrap() + "\n";
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::create_dir_all(golden_dir()).unwrap();
            std::fs::write(&path, &text).unwrap();
        } else {
            let want = std::fs::read_to_string(&path)
                .unwrap_or_else(|_| panic!("missing golden file {}; rerun with UPDATE_GOLDEN=1", path.display()));
            assert_eq!(text, want, "golden mismatch for {name}");
        }
        (status, value)
    }
}

fn corpus() -> Corpus {
    synth_corpus(&SynthConfig {
        n_clips: 40,
        seed: 13,
        ..Default::default()
    })
    .unwrap()
}

fn report_config() -> PipelineConfig {
    PipelineConfig {
        train: TrainConfig {
            epochs: 2,
            ..Default::default()
        },
        classifier: ClassifierConfig {
            epochs: 1,
            ..Default::default()
        },
        n_quote_sources: 200,
        ..Default::default()
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap()
}

#[tokio::test]
async fn full_session_matches_golden_files() {
    let source = corpus();
    let state = AppState::with_report_config(Engine::default(), FeedbackStore::in_memory(), report_config());
    let mut s = Session::new(state);

    let (st, _) = s.step("health_empty", "GET", "/health", None).await;
    assert_eq!(st, StatusCode::OK);
    let (st, body) = s.step("search_before_binding", "GET", "/search?q=bada&method=baseline", None).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(body["error"], "no_method_bound");

    let (st, body) = s.step("ingest_clips", "POST", "/ingest/clips", Some(to_value(&source.clips()))).await;
    assert_eq!((st, body["corpus_size"].as_u64()), (StatusCode::OK, Some(40)));
    let (st, _) = s
        .step("ingest_annotations", "POST", "/ingest/annotations", Some(to_value(&source.annotations())))
        .await;
    assert_eq!(st, StatusCode::OK);
    let features: Vec<Value> = source
        .features()
        .into_iter()
        .map(|(clip_id, vector)| json!({"clip_id": clip_id, "vector": vector}))
        .collect();
    let (st, _) = s.step("ingest_features", "POST", "/ingest/features", Some(json!(features))).await;
    assert_eq!(st, StatusCode::OK);
    let docs: Vec<Value> = source
        .transcripts()
        .iter()
        .map(|(clip_id, text)| json!({"clip_id": clip_id, "text": text}))
        .collect();
    let (st, _) = s.step("ingest_transcripts", "POST", "/ingest/transcripts", Some(json!(docs))).await;
    assert_eq!(st, StatusCode::OK);
    let (st, _) = s.step("ingest_unknown_kind", "POST", "/ingest/shots", Some(json!([]))).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, body) = s.step("ingest_bad_body", "POST", "/ingest/clips", Some(json!({"clip_id": 3}))).await;
    assert_eq!((st, body["error"].as_str()), (StatusCode::BAD_REQUEST, Some("invalid_body")));
    let (st, body) = s
        .step(
            "ingest_unknown_clip",
            "POST",
            "/ingest/transcripts",
            Some(json!([{"clip_id": "nope", "text": "\"hello there all\""}])),
        )
        .await;
    assert_eq!((st, body["error"].as_str()), (StatusCode::BAD_REQUEST, Some("validation")));

    let (st, body) = s
        .step("train_embedding_baseline", "POST", "/train/embedding", Some(json!({"method": "baseline", "epochs": 2})))
        .await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(body["epoch_losses"].as_array().unwrap().len(), 2);
    let (st, _) = s
        .step("train_embedding_bad_field", "POST", "/train/embedding", Some(json!({"epochs": 2, "speed": 9})))
        .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = s
        .step("train_embedding_zero_epochs", "POST", "/train/embedding", Some(json!({"epochs": 0})))
        .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, body) = s.step("index_build", "POST", "/index/build", None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(body["n_docs"], source.transcripts().len());
    let (st, body) = s
        .step(
            "train_classifier",
            "POST",
            "/train/classifier",
            Some(json!({"epochs": 2, "n_quote_sources": 200, "seed": 1})),
        )
        .await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(body["curve"]["epochs"].as_array().unwrap().len(), 2);
    let (st, _) = s
        .step("train_embedding_customised", "POST", "/train/embedding", Some(json!({"method": "customised", "epochs": 2})))
        .await;
    assert_eq!(st, StatusCode::OK);
    let (_, body) = s.step("health_bound", "GET", "/health", None).await;
    assert_eq!(body["methods"], json!(["baseline", "customised", "classifier"]));

    let caption = &source.captions_of("clip00003")[0].text;
    let uri = format!("/search?q={}&method=baseline&k=4", caption.replace(' ', "+"));
    let (st, body) = s.step("search_baseline", "GET", &uri, None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(body["backend"], "embedding");
    assert_eq!(body["results"].as_array().unwrap().len(), 4);
    let (clip, transcript) = source.transcripts().iter().next().unwrap();
    let uri = format!("/search?q={}&method=classifier", urlencode(transcript));
    let (st, body) = s.step("search_classifier_quote", "GET", &uri, None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(body["backend"], "fulltext");
    assert_eq!(body["decided_class"]["label"], "quote_speech");
    assert_eq!(&body["results"][0]["clip_id"], clip.as_str());
    let (st, body) = s.step("search_unknown_method", "GET", "/search?q=bada&method=bogus", None).await;
    assert_eq!((st, body["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_method")));
    let (st, _) = s.step("search_k_zero", "GET", "/search?q=bada&method=baseline&k=0", None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = s.step("search_k_not_number", "GET", "/search?q=bada&method=baseline&k=three", None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = s.step("search_missing_query", "GET", "/search?method=baseline", None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, body) = s.step("search_unencodable", "GET", "/search?q=...&method=baseline", None).await;
    assert_eq!((st, body["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("unencodable")));

    let rating = |stars: i64| {
        json!({"session_id": "s1", "query_id": "q1", "method": "baseline", "clip_id": "clip00003",
               "stars": stars, "query_kind": "visual"})
    };
    let (st, body) = s.step("rate_five", "POST", "/rate", Some(rating(5))).await;
    assert_eq!((st, body["count"].as_u64()), (StatusCode::OK, Some(1)));
    let (st, _) = s.step("rate_four", "POST", "/rate", Some(rating(4))).await;
    assert_eq!(st, StatusCode::OK);
    let (st, _) = s.step("rate_out_of_range", "POST", "/rate", Some(rating(6))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = s.step("rate_missing_field", "POST", "/rate", Some(json!({"session_id": "s1"}))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = s
        .step("rate_unknown_method", "POST", "/rate", Some(json!({"session_id": "s1", "query_id": "q1",
            "method": "magic", "clip_id": "c", "stars": 3})))
        .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (_, body) = s.step("summary_ratings", "GET", "/summary/ratings", None).await;
    assert_eq!(body["n_ratings"], 2);
    assert_eq!(body["methods"]["baseline"]["all"]["mean"], 4.5);
    assert_eq!(body["methods"]["baseline"]["visual"]["count"], 2);

    let vote = |session: &str, aspect: &str, choice: &str| json!({"session_id": session, "aspect": aspect, "choice": choice});
    let (_, body) = s.step("vote_first", "POST", "/vote", Some(vote("s1", "engagingness", "text_to_video"))).await;
    assert_eq!(body["status"], "stored");
    s.step("vote_second_session", "POST", "/vote", Some(vote("s2", "engagingness", "traditional"))).await;
    s.step("vote_third_session", "POST", "/vote", Some(vote("s3", "Humanness", "TextToVideo"))).await;
    let (_, body) = s.step("vote_overwrite", "POST", "/vote", Some(vote("s2", "engagingness", "text_to_video"))).await;
    assert_eq!(body["status"], "updated");
    let (st, _) = s.step("vote_bad_aspect", "POST", "/vote", Some(vote("s1", "beauty", "traditional"))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (_, body) = s.step("summary_votes", "GET", "/summary/votes", None).await;
    assert_eq!(body["sessions"], 3);
    assert_eq!(body["aspects"]["engagingness"], json!({"text_to_video": 2, "traditional": 0, "total": 2}));
    assert_eq!(body["aspects"]["humanness"]["text_to_video"], 1);

    let (st, body) = s.step("eval_report", "GET", "/eval/report", None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(body["pool_size"], body["n_test_pairs"]);
    let (_, again) = s.call("GET", "/eval/report", None).await;
    assert_eq!(body, again);
    assert!(s.steps >= 30);
}

fn urlencode(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}

#[tokio::test]
async fn failed_feedback_write_leaves_stores_unchanged() {
    let state = AppState::new(Engine::default(), FeedbackStore::with_sink(Box::new(FailingSink)));
    let mut s = Session::new(state);
    let rating = json!({"session_id": "s", "query_id": "q", "method": "customised", "clip_id": "c", "stars": 3});
    let (st, body) = s.step("rate_sink_failure", "POST", "/rate", Some(rating)).await;
    assert_eq!((st, body["error"].as_str()), (StatusCode::INTERNAL_SERVER_ERROR, Some("io")));
    let vote = json!({"session_id": "s", "aspect": "informativeness", "choice": "traditional"});
    let (st, _) = s.step("vote_sink_failure", "POST", "/vote", Some(vote)).await;
    assert_eq!(st, StatusCode::INTERNAL_SERVER_ERROR);
    let (_, body) = s.step("summary_ratings_after_failure", "GET", "/summary/ratings", None).await;
    assert_eq!(body["n_ratings"], 0);
    let (_, body) = s.step("summary_votes_after_failure", "GET", "/summary/votes", None).await;
    assert_eq!(body["sessions"], 0);
}

#[tokio::test]
async fn ingest_resets_a_cached_report() {
    let engine = Engine::new(corpus());
    let mut s = Session::new(AppState::with_report_config(engine, FeedbackStore::in_memory(), report_config()));
    let (st, first) = s.call("GET", "/eval/report", None).await;
    assert_eq!(st, StatusCode::OK);
    let extra = json!([{"clip_id": "clip00001", "text": "a second caption tada", "kind": "caption", "origin": "original"}]);
    let (st, _) = s.call("POST", "/ingest/annotations", Some(extra.to_string())).await;
    assert_eq!(st, StatusCode::OK);
    let (_, second) = s.call("GET", "/eval/report", None).await;
    assert_eq!(first["seed"], second["seed"]);
    let (_, health) = s.call("GET", "/health", None).await;
    assert_eq!(health["corpus_size"], 40);
}
