//! JSON-over-HTTP front end for correction with examples, plus the
//! learner feedback log.
//!
//! | route | |
//! |---|---|
//! | `POST /api/correct` | `{text, method?, lambda?}` → corrected text, edits, examples |
//! | `POST /api/recompose` | `{text, accepted, method?, lambda?}` → text with only the accepted edits |
//! | `POST /api/feedback` | `{sentence_id, edit_index, method, label, accepted}` → appended to the log |
//! | `GET /api/usefulness` | per-method share of examples labelled useful |
//! | `GET /api/health` | load state and datastore size |
//!
//! Spans are token indices into the returned `tokens` / `corrected_tokens`.

mod config;
mod log;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::align::{apply_edits, Edit, EditOp, Span};
use crate::corpus::{split_words, ErrorType, Example};
use crate::engine::{sentence_id, Correction, Engine, Method};
use crate::error::{Error, Result};
use crate::eval::{usefulness_score, DecisionRecord};
use crate::knn_decode::DecodeConfig;

pub use config::{AppConfig, Paths, ServiceConfig};
pub use log::DecisionLog;

pub struct AppState {
    engine: Option<Arc<Engine>>,
    decode: DecodeConfig,
    service: ServiceConfig,
    log: Mutex<DecisionLog>,
}

impl AppState {
    /// `engine` is `None` when artifacts are unavailable; correction routes
    /// then answer 503.
    pub fn new(engine: Option<Engine>, decode: DecodeConfig, service: ServiceConfig, log: DecisionLog) -> Arc<Self> {
        Arc::new(AppState {
            engine: engine.map(Arc::new),
            decode,
            service,
            log: Mutex::new(log),
        })
    }
}

#[derive(Debug)]
struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidInput(_) | Error::InvalidConfig(_) | Error::DegenerateConfig(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> std::result::Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("malformed body: {e}")))
}

#[derive(Debug, Deserialize)]
struct CorrectRequest {
    text: String,
    method: Option<Method>,
    lambda: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RecomposeRequest {
    text: String,
    accepted: Vec<usize>,
    method: Option<Method>,
    lambda: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct FeedbackRequest {
    sentence_id: String,
    edit_index: usize,
    method: Method,
    label: u8,
    accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleView {
    pub pair_id: u32,
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    pub anchor_position: usize,
    pub anchor_edit: Option<Edit>,
    pub distance: f32,
}

impl From<Example> for ExampleView {
    fn from(e: Example) -> Self {
        ExampleView {
            pair_id: e.pair_id,
            src: e.src,
            tgt: e.tgt,
            anchor_position: e.anchor_position,
            anchor_edit: e.anchor_edit,
            distance: e.squared_distance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditView {
    pub src_span: Span,
    pub tgt_span: Span,
    pub op: EditOp,
    pub src_tokens: Vec<String>,
    pub tgt_tokens: Vec<String>,
    pub error_type: ErrorType,
    pub example: Option<ExampleView>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectResponse {
    pub sentence_id: String,
    pub method: Method,
    pub tokens: Vec<String>,
    pub corrected: String,
    pub corrected_tokens: Vec<String>,
    pub edits: Vec<EditView>,
    pub score: f64,
}

impl AppState {
    fn engine(&self) -> std::result::Result<Arc<Engine>, ApiError> {
        self.engine
            .clone()
            .ok_or_else(|| ApiError(StatusCode::SERVICE_UNAVAILABLE, "model or datastore not loaded".into()))
    }

    fn check_text(&self, text: &str) -> std::result::Result<Vec<String>, ApiError> {
        if text.len() > self.service.max_text_len {
            return Err(ApiError(
                StatusCode::PAYLOAD_TOO_LARGE,
                format!("text longer than {} bytes", self.service.max_text_len),
            ));
        }
        let words = split_words(text);
        if words.is_empty() {
            return Err(ApiError(StatusCode::BAD_REQUEST, "text is empty".into()));
        }
        Ok(words)
    }

    async fn run_correct(
        &self,
        text: &str,
        method: Option<Method>,
        lambda: Option<f64>,
    ) -> std::result::Result<(Vec<String>, Method, Correction), ApiError> {
        let words = self.check_text(text)?;
        let engine = self.engine()?;
        let method = method.unwrap_or(self.service.default_method);
        let config = match lambda {
            Some(l) => self.decode.with_lambda(l),
            None => self.decode.clone(),
        };
        config.validate()?;
        let src = words.clone();
        let c = tokio::task::spawn_blocking(move || engine.correct(&src, method, &config))
            .await
            .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
        Ok((words, method, c))
    }
}

impl CorrectResponse {
    /// `tokens` is the tokenization of `text` the edit spans refer to.
    pub fn new(text: &str, tokens: Vec<String>, method: Method, c: Correction) -> Self {
        let edits = c
            .edits
            .into_iter()
            .map(|(e, ex)| EditView {
                src_span: e.src_span,
                tgt_span: e.tgt_span,
                op: e.op,
                src_tokens: e.src_tokens,
                tgt_tokens: e.tgt_tokens,
                error_type: e.error_type,
                example: ex.map(ExampleView::from),
            })
            .collect();
        CorrectResponse {
            sentence_id: sentence_id(text),
            method,
            tokens,
            corrected: c.output.join(" "),
            corrected_tokens: c.output,
            edits,
            score: c.result.score,
        }
    }
}

async fn correct(State(s): State<Arc<AppState>>, body: Bytes) -> ApiResult<CorrectResponse> {
    let req: CorrectRequest = parse_body(&body)?;
    let (tokens, method, c) = s.run_correct(&req.text, req.method, req.lambda).await?;
    Ok(Json(CorrectResponse::new(&req.text, tokens, method, c)))
}

#[derive(Debug, Serialize)]
struct RecomposeResponse {
    recomposed: String,
    tokens: Vec<String>,
}

async fn recompose(State(s): State<Arc<AppState>>, body: Bytes) -> ApiResult<RecomposeResponse> {
    let req: RecomposeRequest = parse_body(&body)?;
    let (tokens, _, c) = s.run_correct(&req.text, req.method, req.lambda).await?;
    if let Some(bad) = req.accepted.iter().find(|&&i| i >= c.edits.len()) {
        return Err(ApiError(
            StatusCode::BAD_REQUEST,
            format!("edit index {bad} out of range ({} edits)", c.edits.len()),
        ));
    }
    let chosen = c
        .edits
        .iter()
        .enumerate()
        .filter(|(i, _)| req.accepted.contains(i))
        .map(|(_, (e, _))| e);
    let out = apply_edits(&tokens, chosen);
    Ok(Json(RecomposeResponse {
        recomposed: out.join(" "),
        tokens: out,
    }))
}

async fn feedback(State(s): State<Arc<AppState>>, body: Bytes) -> ApiResult<serde_json::Value> {
    let req: FeedbackRequest = parse_body(&body)?;
    if req.label > 1 {
        return Err(ApiError(StatusCode::BAD_REQUEST, format!("label {} is not 0 or 1", req.label)));
    }
    if req.sentence_id.is_empty() {
        return Err(ApiError(StatusCode::BAD_REQUEST, "sentence_id is empty".into()));
    }
    let record = DecisionRecord {
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        sentence_id: req.sentence_id,
        method: req.method.to_string(),
        edit_index: req.edit_index,
        label: req.label,
        accepted: req.accepted,
    };
    let state = Arc::clone(&s);
    tokio::task::spawn_blocking(move || {
        let mut log = state.log.lock().unwrap_or_else(|p| p.into_inner());
        log.append(&record)
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(serde_json::json!({ "ok": true })))
}

#[derive(Debug, Serialize)]
struct UsefulnessResponse {
    records: usize,
    methods: BTreeMap<String, f64>,
}

async fn usefulness(State(s): State<Arc<AppState>>) -> ApiResult<UsefulnessResponse> {
    let records = {
        let log = s.log.lock().unwrap_or_else(|p| p.into_inner());
        log.records()?
    };
    let methods = match usefulness_score(&records) {
        Ok(m) => m,
        Err(Error::NoData(_)) => BTreeMap::new(),
        Err(e) => return Err(e.into()),
    };
    Ok(Json(UsefulnessResponse {
        records: records.len(),
        methods,
    }))
}

#[derive(Debug, Serialize)]
struct HealthResponse {
    status: &'static str,
    model_loaded: bool,
    store_loaded: bool,
    datastore_count: usize,
}

async fn health(State(s): State<Arc<AppState>>) -> Json<HealthResponse> {
    let loaded = s.engine.is_some();
    Json(HealthResponse {
        status: if loaded { "ok" } else { "unavailable" },
        model_loaded: loaded,
        store_loaded: loaded,
        datastore_count: s.engine.as_ref().map_or(0, |e| e.store.len()),
    })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/correct", post(correct))
        .route("/api/recompose", post(recompose))
        .route("/api/feedback", post(feedback))
        .route("/api/usefulness", get(usefulness))
        .route("/api/health", get(health))
        .with_state(state)
}

/// Serves until interrupted.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
