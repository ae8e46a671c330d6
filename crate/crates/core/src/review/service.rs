//! HTTP JSON API over a [`Workspace`].

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ItemFilter, ItemStatus, JudgmentSubmission, ReviewItem, StoreError};
use crate::agents::AgentError;
use crate::analytics::{build_report, QualityReport};
use crate::workspace::{IngestSummary, MaterialUpload, Pipeline, PipelineError, Workspace};

pub const MAX_GENERATE_COUNT: usize = 50;
const MAX_UPLOAD_BYTES: usize = 8 * 1024 * 1024;

#[derive(Clone)]
pub struct AppState {
    pub workspace: Arc<Workspace>,
    pub pipeline: Pipeline,
    /// Bearer token to SME id. Empty disables authentication.
    pub tokens: Arc<HashMap<String, String>>,
}

#[derive(Debug)]
pub struct ServiceError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
}

impl ServiceError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self { status, kind, message: message.into() }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.kind, "message": self.message}))).into_response()
    }
}

impl From<StoreError> for ServiceError {
    fn from(e: StoreError) -> Self {
        let (status, kind) = match &e {
            StoreError::DuplicateQuestion(_) => (StatusCode::CONFLICT, "DuplicateQuestion"),
            StoreError::QuestionMismatch { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "QuestionMismatch"),
            StoreError::InvalidItem(_) => (StatusCode::UNPROCESSABLE_ENTITY, "InvalidItem"),
            StoreError::UnknownQuestion(_) => (StatusCode::NOT_FOUND, "UnknownQuestion"),
            StoreError::UnknownDimension(_) => (StatusCode::UNPROCESSABLE_ENTITY, "UnknownDimension"),
            StoreError::MissingRationale => (StatusCode::UNPROCESSABLE_ENTITY, "MissingRationale"),
            StoreError::MissingSme => (StatusCode::UNPROCESSABLE_ENTITY, "MissingSme"),
            StoreError::NotAssigned { .. } => (StatusCode::FORBIDDEN, "NotAssigned"),
            StoreError::Storage(_) | StoreError::Corrupt { .. } => {
                (StatusCode::INTERNAL_SERVER_ERROR, "StorageFailure")
            }
        };
        Self::new(status, kind, e.to_string())
    }
}

impl From<PipelineError> for ServiceError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Store(s) => s.into(),
            PipelineError::Ingest { .. } => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "IngestError", e.to_string()),
            PipelineError::NoMaterials => Self::new(StatusCode::CONFLICT, "NoMaterials", e.to_string()),
            PipelineError::Agent(ref a) => {
                let kind = match a {
                    AgentError::SchemaViolation(_) => "SchemaViolation",
                    AgentError::ToolLoopExceeded(_) => "ToolLoopExceeded",
                    AgentError::Client(_) => "ClientError",
                    AgentError::InvalidCode(_) => "InvalidCode",
                    AgentError::MissingToolUse => "MissingToolUse",
                    AgentError::EmptyContext => "EmptyContext",
                    AgentError::Prompt(_) => "PromptError",
                };
                Self::new(StatusCode::BAD_GATEWAY, kind, e.to_string())
            }
            PipelineError::Retrieval(_) => Self::new(StatusCode::BAD_GATEWAY, "RetrievalError", e.to_string()),
            PipelineError::Io { .. } => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "StorageFailure", e.to_string()),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ServiceError>;

fn authenticate(state: &AppState, headers: &HeaderMap) -> Result<Option<String>, ServiceError> {
    if state.tokens.is_empty() {
        return Ok(None);
    }
    let token = headers
        .get(axum::http::header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim);
    token
        .and_then(|t| state.tokens.get(t))
        .cloned()
        .map(Some)
        .ok_or_else(|| ServiceError::new(StatusCode::UNAUTHORIZED, "Unauthorized", "missing or unknown bearer token"))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, PipelineError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
        .map_err(ServiceError::from)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

fn doc_id_of(file_name: &str) -> String {
    let base = file_name.rsplit(['/', '\\']).next().unwrap_or(file_name);
    let stem = base.rsplit_once('.').map_or(base, |(s, _)| s);
    if stem.is_empty() { "material".to_string() } else { stem.to_string() }
}

async fn upload_materials(
    State(state): State<AppState>,
    headers: HeaderMap,
    mut multipart: Multipart,
) -> ApiResult<IngestSummary> {
    authenticate(&state, &headers)?;
    let bad = |e: axum::extract::multipart::MultipartError| {
        ServiceError::new(StatusCode::BAD_REQUEST, "BadMultipart", e.to_string())
    };
    let mut topic: Option<String> = None;
    let mut files = Vec::new();
    while let Some(field) = multipart.next_field().await.map_err(bad)? {
        let name = field.name().unwrap_or_default().to_string();
        match field.file_name().map(String::from) {
            Some(file_name) => files.push((doc_id_of(&file_name), field.bytes().await.map_err(bad)?.to_vec())),
            None if name == "topic" => topic = Some(field.text().await.map_err(bad)?.trim().to_string()),
            None => {}
        }
    }
    if files.is_empty() {
        return Err(ServiceError::new(StatusCode::BAD_REQUEST, "NoFiles", "upload at least one file part"));
    }
    let uploads: Vec<MaterialUpload> = files
        .into_iter()
        .map(|(doc_id, bytes)| MaterialUpload {
            topic: topic.clone().filter(|t| !t.is_empty()).unwrap_or_else(|| doc_id.clone()),
            doc_id,
            bytes,
        })
        .collect();
    let ws = state.workspace.clone();
    let embedder = state.pipeline.embedder.clone();
    Ok(Json(blocking(move || ws.ingest(&uploads, embedder.as_ref())).await?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub topic: String,
    #[serde(default = "one")]
    pub count: usize,
    #[serde(default)]
    pub sme_id: Option<String>,
}

fn one() -> usize {
    1
}

async fn generate(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(req): Json<GenerateRequest>,
) -> ApiResult<Vec<ReviewItem>> {
    let caller = authenticate(&state, &headers)?;
    if req.topic.trim().is_empty() {
        return Err(ServiceError::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidRequest", "topic must not be empty"));
    }
    if req.count == 0 || req.count > MAX_GENERATE_COUNT {
        return Err(ServiceError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "InvalidRequest",
            format!("count must be between 1 and {MAX_GENERATE_COUNT}"),
        ));
    }
    let assigned = caller.or(req.sme_id);
    let ws = state.workspace.clone();
    let pipeline = state.pipeline.clone();
    Ok(Json(blocking(move || ws.generate(req.topic.trim(), req.count, assigned, &pipeline)).await?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSummary {
    pub question_id: String,
    pub topic: String,
    pub stem: String,
    pub status: ItemStatus,
    pub assigned_sme: Option<String>,
    pub judged: usize,
    pub inconsistent: bool,
    pub created_at: DateTime<Utc>,
}

impl From<&ReviewItem> for ItemSummary {
    fn from(i: &ReviewItem) -> Self {
        Self {
            question_id: i.question.question_id.clone(),
            topic: i.question.topic.clone(),
            stem: i.question.stem.clone(),
            status: i.status,
            assigned_sme: i.assigned_sme.clone(),
            judged: i.judgments.len(),
            inconsistent: i.report.inconsistent,
            created_at: i.question.created_at,
        }
    }
}

async fn list_items(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(filter): Query<ItemFilter>,
) -> ApiResult<Vec<ItemSummary>> {
    authenticate(&state, &headers)?;
    Ok(Json(state.workspace.store.list(&filter).iter().map(ItemSummary::from).collect()))
}

async fn get_item(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<ReviewItem> {
    authenticate(&state, &headers)?;
    state
        .workspace
        .store
        .get(&id)
        .map(Json)
        .ok_or_else(|| StoreError::UnknownQuestion(id).into())
}

async fn submit_judgment(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Json(sub): Json<JudgmentSubmission>,
) -> ApiResult<ReviewItem> {
    if let Some(caller) = authenticate(&state, &headers)? {
        if caller != sub.sme_id {
            return Err(ServiceError::new(StatusCode::FORBIDDEN, "NotAssigned", "token does not belong to sme_id"));
        }
    }
    let now = state.pipeline.clock.now();
    let ws = state.workspace.clone();
    Ok(Json(blocking(move || Ok(ws.store.submit_judgment(&id, sub, now)?)).await?))
}

async fn report(State(state): State<AppState>, headers: HeaderMap) -> ApiResult<QualityReport> {
    authenticate(&state, &headers)?;
    Ok(Json(build_report(&state.workspace.store.snapshot(), state.pipeline.clock.now())))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/materials", post(upload_materials))
        .route("/generate", post(generate))
        .route("/items", get(list_items))
        .route("/items/{id}", get(get_item))
        .route("/items/{id}/judgments", post(submit_judgment))
        .route("/report", get(report))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
