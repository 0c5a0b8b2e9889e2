use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::{ServeDir, ServeFile};

use ontovec_core::query::{ResultRow, DEFAULT_K};
use ontovec_core::{ModelKind, VersionManifest};

use crate::error::ApiError;
use crate::state::{AppState, LoadedModel};

/// Upper bound on `k` for nearest-neighbour queries.
pub const MAX_K: usize = 100;
pub const VERSION_HEADER: &str = "x-ontovec-version";

/// All API routes; with a UI directory configured, unknown paths are served
/// from it (falling back to its `index.html`).
pub fn api_router(state: Arc<AppState>) -> Router {
    let router = Router::new()
        .route("/api/v1/catalog", get(catalog))
        .route("/api/v1/vector/{kg}/{model}/{concept}", get(vector))
        .route("/api/v1/similarity/{kg}/{model}", get(similarity))
        .route("/api/v1/closest/{kg}/{model}", get(closest))
        .route("/api/v1/download/{kg}/{model}/{version}", get(download))
        .route("/health", get(health));
    let router = match &state.ui_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(dir.join("index.html")))),
        None => router.fallback(not_found),
    };
    router.with_state(state)
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(t)| t).map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such route")
}

fn parse_model(raw: &str) -> Result<ModelKind, ApiError> {
    raw.parse()
        .map_err(|_| ApiError::not_found(format!("unknown model `{raw}`")))
}

fn default_version() -> String {
    "latest".into()
}

async fn load(state: &Arc<AppState>, kg: &str, model: &str, version: &str) -> Result<Arc<LoadedModel>, ApiError> {
    let model = parse_model(model)?;
    state.model(kg, model, version).await
}

fn with_version(mut response: Response, version: &str) -> Response {
    if let Ok(v) = HeaderValue::from_str(version) {
        response.headers_mut().insert(VERSION_HEADER, v);
    }
    response
}

#[derive(Debug, Serialize)]
struct VersionInfo {
    tag: String,
    retrieved_at: String,
    sha256: String,
    models: Vec<ModelKind>,
}

#[derive(Debug, Serialize)]
struct KgEntry {
    name: String,
    /// Oldest first.
    versions: Vec<String>,
    latest: String,
    models: Vec<ModelKind>,
    details: Vec<VersionInfo>,
}

fn kg_entry(name: &str, versions: &[VersionManifest]) -> KgEntry {
    let models: BTreeSet<ModelKind> = versions.iter().flat_map(|m| m.models.iter().copied()).collect();
    KgEntry {
        name: name.to_string(),
        versions: versions.iter().map(|m| m.version_tag.clone()).collect(),
        latest: versions.last().map(|m| m.version_tag.clone()).unwrap_or_default(),
        models: models.into_iter().collect(),
        details: versions
            .iter()
            .map(|m| VersionInfo {
                tag: m.version_tag.clone(),
                retrieved_at: m.retrieved_at.to_rfc3339(),
                sha256: m.sha256.clone(),
                models: m.models.clone(),
            })
            .collect(),
    }
}

async fn catalog(State(state): State<Arc<AppState>>) -> Json<Value> {
    let catalog = state.catalog();
    let kgs: Vec<KgEntry> = catalog.kgs.iter().map(|(name, v)| kg_entry(name, v)).collect();
    Json(json!({ "kgs": kgs }))
}

#[derive(Debug, Deserialize)]
struct VersionParam {
    #[serde(default = "default_version")]
    version: String,
}

async fn vector(
    State(state): State<Arc<AppState>>,
    Path((kg, model, concept)): Path<(String, String, String)>,
    q: Result<Query<VersionParam>, QueryRejection>,
) -> Result<Response, ApiError> {
    let q = query(q)?;
    let loaded = load(&state, &kg, &model, &q.version).await?;
    let row = loaded.index.resolve(&concept)?;
    let body = json!({
        "kg": kg,
        "model": loaded.model,
        "version": loaded.version(),
        "iri": loaded.index.iri(row),
        "label": loaded.index.label(row),
        "vector": loaded.index.vector(row),
    });
    Ok(with_version(Json(body).into_response(), loaded.version()))
}

#[derive(Debug, Deserialize)]
struct SimilarityParams {
    a: Option<String>,
    b: Option<String>,
    #[serde(default = "default_version")]
    version: String,
}

async fn similarity(
    State(state): State<Arc<AppState>>,
    Path((kg, model)): Path<(String, String)>,
    q: Result<Query<SimilarityParams>, QueryRejection>,
) -> Result<Response, ApiError> {
    let q = query(q)?;
    let (Some(a), Some(b)) = (q.a, q.b) else {
        return Err(ApiError::bad_request("query parameters `a` and `b` are required"));
    };
    let loaded = load(&state, &kg, &model, &q.version).await?;
    let sim = loaded.index.similarity(&a, &b)?;
    let body = json!({
        "kg": kg,
        "model": loaded.model,
        "version": loaded.version(),
        "a": sim.a,
        "b": sim.b,
        "score": sim.score,
    });
    Ok(with_version(Json(body).into_response(), loaded.version()))
}

#[derive(Debug, Deserialize)]
struct ClosestParams {
    q: Option<String>,
    k: Option<usize>,
    namespace: Option<String>,
    #[serde(default = "default_version")]
    version: String,
}

#[derive(Debug, Serialize)]
struct ClosestBody<'a> {
    kg: &'a str,
    model: ModelKind,
    version: &'a str,
    query: String,
    k: usize,
    rows: Vec<ResultRow>,
}

async fn closest(
    State(state): State<Arc<AppState>>,
    Path((kg, model)): Path<(String, String)>,
    params: Result<Query<ClosestParams>, QueryRejection>,
) -> Result<Response, ApiError> {
    let params = query(params)?;
    let Some(q) = params.q else {
        return Err(ApiError::bad_request("query parameter `q` is required"));
    };
    let k = params.k.unwrap_or(DEFAULT_K).min(MAX_K);
    let loaded = load(&state, &kg, &model, &params.version).await?;
    let result = loaded.index.top_k(&q, k, params.namespace.as_deref())?;
    let body = ClosestBody {
        kg: &kg,
        model: loaded.model,
        version: loaded.version(),
        query: result.query,
        k,
        rows: result.rows,
    };
    Ok(with_version(Json(body).into_response(), loaded.version()))
}

/// The stored vectors.json, byte for byte. HEAD is answered by the same
/// route without a body.
async fn download(
    State(state): State<Arc<AppState>>,
    Path((kg, model, version)): Path<(String, String, String)>,
) -> Result<Response, ApiError> {
    let model = parse_model(&model)?;
    let manifest = state.catalog().resolve(&kg, &version)?.clone();
    let tag = manifest.version_tag.clone();
    let store = state.store().clone();
    let bytes = tokio::task::spawn_blocking(move || store.read_vectors_bytes(&manifest, model))
        .await
        .map_err(|e| ApiError::internal(format!("read task failed: {e}")))??;
    let filename = format!("attachment; filename=\"{kg}-{tag}-{model}.json\"");
    let mut response = (
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
            (
                header::CONTENT_DISPOSITION,
                HeaderValue::from_str(&filename).map_err(|e| ApiError::internal(e.to_string()))?,
            ),
        ],
        bytes,
    )
        .into_response();
    response = with_version(response, &tag);
    Ok(response)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    let store = state.store().clone();
    let readable = tokio::task::spawn_blocking(move || store.kgs().is_ok())
        .await
        .unwrap_or(false);
    let catalog = state.catalog();
    let status = if readable && catalog.degraded.is_none() {
        "ok"
    } else {
        "degraded"
    };
    let serving: BTreeMap<&str, &str> = catalog
        .kgs
        .iter()
        .filter_map(|(kg, v)| v.last().map(|m| (kg.as_str(), m.version_tag.as_str())))
        .collect();
    Json(json!({
        "status": status,
        "loaded_versions": serving,
        "loaded_models": state.loaded(),
        "uptime": state.uptime_secs(),
    }))
}
