use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;
use wst_core::api::{AdvanceRequest, CreatedSession, PlanRequest, ReplayReport, SelectRequest, UpdateStateRequest};
use wst_core::{dsl, interchange, ScenarioDocument};

use crate::error::ServiceError;
use crate::session::{replay, Session};
use crate::store::Store;

type AppState = Arc<Store>;

/// JSON body whose decoding errors come back as the service's error body.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ServiceError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state).await.map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        serde_json::from_slice(&bytes).map(Body).map_err(|e| ServiceError::BadRequest(e.to_string()))
    }
}

pub fn router(store: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(summary))
        .route("/sessions/{id}/state", get(get_state).post(update_state))
        .route("/sessions/{id}/plan", post(plan))
        .route("/sessions/{id}/instances", post(select))
        .route("/sessions/{id}/instances/{iid}/validate", get(validate))
        .route("/sessions/{id}/instances/{iid}/advance", post(advance))
        .route("/sessions/{id}/instances/{iid}/trace", get(trace))
        .route("/sessions/{id}/conflicts", get(conflicts))
        .route("/sessions/{id}/merged", get(merged))
        .route("/sessions/{id}/audit", get(audit))
        .route("/sessions/{id}/replay", get(replay_log))
        .with_state(store)
}

/// Runs `op` on the session off the async runtime, then persists it.
async fn with_session<T, F>(store: AppState, id: String, op: F) -> Result<Json<T>, ServiceError>
where
    T: Serialize + Send + 'static,
    F: FnOnce(&mut Session) -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || {
        let handle = store.get(&id)?;
        let mut session = handle.lock().unwrap_or_else(|e| e.into_inner());
        let out = op(&mut session)?;
        store.persist(&session)?;
        Ok(Json(out))
    })
    .await
    .map_err(|e| ServiceError::Storage(format!("worker failed: {e}")))?
}

/// Reads the session without logging anything.
async fn peek<T, F>(store: AppState, id: String, read: F) -> Result<Json<T>, ServiceError>
where
    T: Serialize + Send + 'static,
    F: FnOnce(&Session) -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || {
        let handle = store.get(&id)?;
        let session = handle.lock().unwrap_or_else(|e| e.into_inner()).clone();
        read(&session).map(Json)
    })
    .await
    .map_err(|e| ServiceError::Storage(format!("worker failed: {e}")))?
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

/// Accepts `.wst` text or an interchange JSON document.
pub fn parse_scenario(headers: &HeaderMap, body: &[u8]) -> Result<ScenarioDocument, ServiceError> {
    let json_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains("json"));
    let looks_json = body.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{');
    if json_type || looks_json {
        return Ok(interchange::load(body)?);
    }
    let text = std::str::from_utf8(body).map_err(|e| ServiceError::BadRequest(format!("scenario is not UTF-8: {e}")))?;
    Ok(dsl::parse(text)?)
}

async fn create(
    State(store): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<(StatusCode, Json<CreatedSession>), ServiceError> {
    let document = parse_scenario(&headers, &body)?;
    let created = tokio::task::spawn_blocking(move || {
        let session = Session::create(uuid::Uuid::new_v4().to_string(), document)?;
        let created =
            CreatedSession { id: session.id().to_string(), version: session.live().version(), state_hash: session.live().hash() };
        store.insert(session)?;
        tracing::info!(session = %created.id, "created session");
        Ok::<_, ServiceError>(created)
    })
    .await
    .map_err(|e| ServiceError::Storage(format!("worker failed: {e}")))??;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn list(State(store): State<AppState>) -> Json<Vec<String>> {
    Json(store.ids())
}

async fn summary(State(store): State<AppState>, Path(id): Path<String>) -> Result<impl axum::response::IntoResponse, ServiceError> {
    peek(store, id, |s| Ok(s.summary())).await
}

async fn get_state(State(store): State<AppState>, Path(id): Path<String>) -> Result<impl axum::response::IntoResponse, ServiceError> {
    with_session(store, id, |s| Ok(s.get_state())).await
}

async fn update_state(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Body(req): Body<UpdateStateRequest>,
) -> Result<impl axum::response::IntoResponse, ServiceError> {
    with_session(store, id, move |s| s.update_state(req)).await
}

async fn plan(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Body(req): Body<PlanRequest>,
) -> Result<impl axum::response::IntoResponse, ServiceError> {
    with_session(store, id, move |s| s.plan(req)).await
}

async fn select(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Body(req): Body<SelectRequest>,
) -> Result<(StatusCode, impl axum::response::IntoResponse), ServiceError> {
    Ok((StatusCode::CREATED, with_session(store, id, move |s| s.select(req)).await?))
}

async fn validate(
    State(store): State<AppState>,
    Path((id, iid)): Path<(String, String)>,
) -> Result<impl axum::response::IntoResponse, ServiceError> {
    with_session(store, id, move |s| s.validate(&iid)).await
}

async fn advance(
    State(store): State<AppState>,
    Path((id, iid)): Path<(String, String)>,
    Body(req): Body<AdvanceRequest>,
) -> Result<impl axum::response::IntoResponse, ServiceError> {
    with_session(store, id, move |s| s.advance(&iid, req)).await
}

async fn trace(
    State(store): State<AppState>,
    Path((id, iid)): Path<(String, String)>,
) -> Result<impl axum::response::IntoResponse, ServiceError> {
    with_session(store, id, move |s| s.trace(&iid)).await
}

async fn conflicts(State(store): State<AppState>, Path(id): Path<String>) -> Result<impl axum::response::IntoResponse, ServiceError> {
    with_session(store, id, |s| s.conflicts()).await
}

async fn merged(State(store): State<AppState>, Path(id): Path<String>) -> Result<impl axum::response::IntoResponse, ServiceError> {
    with_session(store, id, |s| Ok(s.merged())).await
}

async fn audit(State(store): State<AppState>, Path(id): Path<String>) -> Result<impl axum::response::IntoResponse, ServiceError> {
    peek(store, id, |s| Ok(s.audit().to_vec())).await
}

async fn replay_log(State(store): State<AppState>, Path(id): Path<String>) -> Result<Json<ReplayReport>, ServiceError> {
    peek(store, id, |s| replay(s.document(), s.audit())).await
}
