mod common;

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use ebgec::engine::Engine;
use ebgec::eval::read_decision_log;
use ebgec::knn_decode::DecodeConfig;
use ebgec::service::{router, AppState, CorrectResponse, DecisionLog, ServiceConfig};

use common::{DEMO_SRC, DEMO_TGT};

/// Retrieval dominates: a planted pair is reproduced token by token.
fn sharp() -> DecodeConfig {
    DecodeConfig {
        lambda: 1.0,
        temperature: 1.0,
        ..Default::default()
    }
}

fn app_with(engine: Option<Engine>, decode: DecodeConfig, log: &Path) -> (Router, Arc<AppState>) {
    let service = ServiceConfig {
        max_text_len: 200,
        ..Default::default()
    };
    let state = AppState::new(engine, decode, service, DecisionLog::open(log).unwrap());
    (router(state.clone()), state)
}

fn planted_app(log: &Path) -> Router {
    let e = common::engine();
    let demo = common::pair(&e, DEMO_SRC, DEMO_TGT, true);
    let e = e.with_planted(&[demo]).unwrap();
    let ident = common::pair(&e, "They have a tremendous problem .", "They have a tremendous problem .", true);
    let e = e.with_planted(&[ident]).unwrap();
    let unseen = common::pair(&e, "They have problem tremendous .", "They have a problem .", false);
    let e = e.with_planted(&[unseen]).unwrap();
    app_with(Some(e), sharp(), log).0
}

async fn send(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let (s, b) = send(app, "POST", uri, Some(body.to_string())).await;
    (s, serde_json::from_slice(&b).unwrap())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (s, b) = send(app, "GET", uri, None).await;
    (s, serde_json::from_slice(&b).unwrap())
}

fn feedback(label: u64) -> Value {
    json!({ "sentence_id": "0123456789abcdef", "edit_index": 0, "method": "eb", "label": label, "accepted": true })
}

#[tokio::test]
async fn planted_pair_yields_one_determiner_insertion_with_its_example() {
    let dir = tempfile::tempdir().unwrap();
    let app = planted_app(&dir.path().join("log.jsonl"));
    let (status, body) = post(&app, "/api/correct", json!({ "text": DEMO_SRC })).await;
    assert_eq!(status, StatusCode::OK);
    let r: CorrectResponse = serde_json::from_value(body).unwrap();
    assert_eq!(r.corrected, DEMO_TGT);
    assert_eq!(r.tokens, common::words(DEMO_SRC));
    assert_eq!(r.edits.len(), 1);
    let e = &r.edits[0];
    assert_eq!((e.src_tokens.len(), e.tgt_tokens.as_slice()), (0, &["a".to_string()][..]));
    assert_eq!(e.error_type.as_str(), "DET");
    let ex = e.example.as_ref().expect("example");
    assert_eq!(ex.tgt, common::words(DEMO_TGT));
    assert_eq!(ex.tgt[ex.anchor_position], "a");
    assert_eq!(ex.distance, 0.0);
    assert_eq!(r.sentence_id.len(), 16);
}

#[tokio::test]
async fn already_correct_input_has_no_edits() {
    let dir = tempfile::tempdir().unwrap();
    let app = planted_app(&dir.path().join("log.jsonl"));
    let (status, body) = post(&app, "/api/correct", json!({ "text": DEMO_TGT })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["corrected"], DEMO_TGT);
    assert_eq!(body["edits"], json!([]));
}

#[tokio::test]
async fn token_method_has_no_example_for_an_unseen_edit() {
    let dir = tempfile::tempdir().unwrap();
    let app = planted_app(&dir.path().join("log.jsonl"));
    let text = "They have problem tremendous .";
    let (_, eb) = post(&app, "/api/correct", json!({ "text": text })).await;
    assert_eq!(eb["corrected"], "They have a problem .");
    let (status, tok) = post(&app, "/api/correct", json!({ "text": text, "method": "token" })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(tok["method"], "token");
    let edits = tok["edits"].as_array().unwrap();
    assert!(!edits.is_empty());
    assert!(edits.iter().any(|e| e["example"].is_null()));
    assert!(eb["edits"].as_array().unwrap().iter().all(|e| !e["example"].is_null()));
}

#[tokio::test]
async fn identical_requests_give_identical_bytes_even_concurrently() {
    let dir = tempfile::tempdir().unwrap();
    let app = planted_app(&dir.path().join("log.jsonl"));
    let pairs = &common::tiny().splits.test;
    for method in ["eb", "token", "embed"] {
        let body = json!({ "text": pairs[0].src.join(" "), "method": method }).to_string();
        let first = send(&app, "POST", "/api/correct", Some(body.clone())).await;
        let handles: Vec<_> = (0..6)
            .map(|_| {
                let (app, body) = (app.clone(), body.clone());
                tokio::spawn(async move { send(&app, "POST", "/api/correct", Some(body)).await })
            })
            .collect();
        for h in handles {
            assert_eq!(h.await.unwrap(), first);
        }
    }
}

#[tokio::test]
async fn bad_requests_are_rejected_with_json_errors() {
    let dir = tempfile::tempdir().unwrap();
    let app = planted_app(&dir.path().join("log.jsonl"));
    let (s, b) = send(&app, "POST", "/api/correct", Some("{not json".into())).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(serde_json::from_slice::<Value>(&b).unwrap()["error"].is_string());
    let cases = [
        json!({ "txt": "a" }),
        json!({ "text": "" }),
        json!({ "text": "They go .", "method": "bm25" }),
        json!({ "text": "They go .", "lambda": 1.5 }),
    ];
    for c in cases {
        assert_eq!(post(&app, "/api/correct", c.clone()).await.0, StatusCode::BAD_REQUEST, "{c}");
    }
    let long = "word ".repeat(60);
    assert_eq!(post(&app, "/api/correct", json!({ "text": long })).await.0, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn without_artifacts_correction_is_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app_with(None, DecodeConfig::default(), &dir.path().join("log.jsonl"));
    let (s, _) = post(&app, "/api/correct", json!({ "text": DEMO_SRC })).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    let (s, h) = get(&app, "/api/health").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(h["model_loaded"], false);
    assert_eq!(h["datastore_count"], 0);
    // feedback does not need the model
    assert_eq!(post(&app, "/api/feedback", feedback(1)).await.0, StatusCode::OK);
}

#[tokio::test]
async fn health_reports_the_datastore_size() {
    let dir = tempfile::tempdir().unwrap();
    let e = common::engine();
    let n = e.store.len();
    let (app, _) = app_with(Some(e), DecodeConfig::default(), &dir.path().join("log.jsonl"));
    let (_, h) = get(&app, "/api/health").await;
    assert_eq!(h["status"], "ok");
    assert_eq!((h["model_loaded"].as_bool(), h["store_loaded"].as_bool()), (Some(true), Some(true)));
    assert_eq!(h["datastore_count"].as_u64(), Some(n as u64));
}

#[tokio::test]
async fn feedback_appends_one_record_and_validates_labels() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.jsonl");
    let (app, _) = app_with(None, DecodeConfig::default(), &log);
    for label in [1, 1, 0, 1] {
        let (s, b) = post(&app, "/api/feedback", feedback(label)).await;
        assert_eq!((s, b), (StatusCode::OK, json!({ "ok": true })));
    }
    assert_eq!(read_decision_log(&log).unwrap().len(), 4);
    assert_eq!(post(&app, "/api/feedback", feedback(2)).await.0, StatusCode::BAD_REQUEST);
    let mut bad_method = feedback(1);
    bad_method["method"] = json!("bm25");
    assert_eq!(post(&app, "/api/feedback", bad_method).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(post(&app, "/api/feedback", json!({ "label": 1 })).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(read_decision_log(&log).unwrap().len(), 4);
    let (_, u) = get(&app, "/api/usefulness").await;
    assert_eq!(u["records"], 4);
    assert_eq!(u["methods"]["eb"], 75.0);
}

#[tokio::test]
async fn restart_keeps_the_log_scoreable() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.jsonl");
    {
        let (app, state) = app_with(None, DecodeConfig::default(), &log);
        for label in [1, 0] {
            post(&app, "/api/feedback", feedback(label)).await;
        }
        drop((app, state));
    }
    let (app, _) = app_with(None, DecodeConfig::default(), &log);
    let (_, u) = get(&app, "/api/usefulness").await;
    assert_eq!((u["records"].as_u64(), u["methods"]["eb"].as_f64()), (Some(2), Some(50.0)));
    post(&app, "/api/feedback", feedback(1)).await;
    let (_, u) = get(&app, "/api/usefulness").await;
    assert_eq!(u["records"], 3);
    let recs = read_decision_log(&log).unwrap();
    assert_eq!(recs.iter().map(|r| r.label).collect::<Vec<_>>(), vec![1, 0, 1]);
}

#[tokio::test]
async fn usefulness_of_an_empty_log_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app_with(None, DecodeConfig::default(), &dir.path().join("log.jsonl"));
    let (s, u) = get(&app, "/api/usefulness").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(u, json!({ "records": 0, "methods": {} }));
}

#[tokio::test]
async fn recomposition_replays_exactly_the_accepted_edits() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app_with(Some(common::engine()), DecodeConfig::default(), &dir.path().join("log.jsonl"));
    let mut checked_multi = false;
    for p in common::tiny().splits.test.iter().take(10) {
        let text = p.src.join(" ");
        let (_, c) = post(&app, "/api/correct", json!({ "text": text })).await;
        let c: CorrectResponse = serde_json::from_value(c).unwrap();
        let n = c.edits.len();
        let (_, all) = post(&app, "/api/recompose", json!({ "text": text, "accepted": (0..n).collect::<Vec<_>>() })).await;
        assert_eq!(all["recomposed"], c.corrected.as_str());
        let (_, none) = post(&app, "/api/recompose", json!({ "text": text, "accepted": [] })).await;
        assert_eq!(none["recomposed"], text.as_str());
        if n >= 2 {
            checked_multi = true;
            let (_, first) = post(&app, "/api/recompose", json!({ "text": text, "accepted": [0] })).await;
            // local replay from the returned spans and tokens
            let e = &c.edits[0];
            let mut local = c.tokens[..e.src_span.lo].to_vec();
            local.extend(e.tgt_tokens.iter().cloned());
            local.extend_from_slice(&c.tokens[e.src_span.hi..]);
            assert_eq!(first["tokens"], json!(local));
        }
        let (s, _) = post(&app, "/api/recompose", json!({ "text": text, "accepted": [n] })).await;
        assert_eq!(s, StatusCode::BAD_REQUEST);
    }
    assert!(checked_multi, "no multi-edit correction among the sampled sentences");
}
