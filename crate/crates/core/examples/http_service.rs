//! Drives the HTTP API in-process: correction, recomposition from accepted
//! edits, feedback, and usefulness. With `--serve` it then listens on
//! 127.0.0.1:8080 until interrupted.

#[path = "common/mod.rs"]
mod common;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;

use ebgec::knn_decode::DecodeConfig;
use ebgec::service::{router, serve, AppState, DecisionLog, ServiceConfig};

async fn call(app: &axum::Router, method: &str, uri: &str, body: serde_json::Value) -> (StatusCode, serde_json::Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(if method == "GET" { Body::empty() } else { Body::from(body.to_string()) })
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null))
}

#[tokio::main]
async fn main() -> ebgec::Result<()> {
    let (engine, splits) = common::engine();
    let log_path = std::env::temp_dir().join("ebgec_example_decisions.jsonl");
    let _ = std::fs::remove_file(&log_path);
    let state = AppState::new(Some(engine), DecodeConfig::default(), ServiceConfig::default(), DecisionLog::open(&log_path)?);
    let app = router(state.clone());

    println!("health: {}", call(&app, "GET", "/api/health", serde_json::Value::Null).await.1);
    let text = splits.test[0].src.join(" ");
    let (status, c) = call(&app, "POST", "/api/correct", serde_json::json!({ "text": text })).await;
    println!("correct {status}: {}", serde_json::to_string_pretty(&c).unwrap());

    let n = c["edits"].as_array().map_or(0, Vec::len);
    let accepted: Vec<usize> = (0..n).step_by(2).collect();
    let (_, r) = call(&app, "POST", "/api/recompose", serde_json::json!({ "text": text, "accepted": accepted })).await;
    println!("recompose with {accepted:?}: {}", r["recomposed"]);

    for (i, label) in [1, 1, 0, 1].into_iter().enumerate() {
        let fb = serde_json::json!({
            "sentence_id": c["sentence_id"], "edit_index": i, "method": "eb", "label": label, "accepted": true
        });
        call(&app, "POST", "/api/feedback", fb).await;
    }
    println!("usefulness: {}", call(&app, "GET", "/api/usefulness", serde_json::Value::Null).await.1);
    let (status, err) = call(&app, "POST", "/api/feedback", serde_json::json!({
        "sentence_id": "x", "edit_index": 0, "method": "eb", "label": 2, "accepted": true
    })).await;
    println!("label 2 -> {status} {err}");

    if std::env::args().any(|a| a == "--serve") {
        serve(state, "127.0.0.1:8080".parse().unwrap()).await?;
    }
    Ok(())
}
