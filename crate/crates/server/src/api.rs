//! HTTP routes.
//!
//! | method | path                         | success | errors            |
//! |--------|------------------------------|---------|-------------------|
//! | GET    | `/health`                    | 200     |                   |
//! | POST   | `/documents`                 | 201     | 400, 422          |
//! | GET    | `/documents?kind=&scenario=` | 200     | 400               |
//! | GET    | `/documents/{id}`            | 200     | 404               |
//! | DELETE | `/documents/{id}`            | 204     | 404               |
//! | PUT    | `/plans/{id}`                | 200     | 400, 404, 409, 422|
//! | GET    | `/plans/{id}/sync-matrix?bucket=` | 200 | 400, 404          |
//! | POST   | `/runs`                      | 202     | 400, 503          |
//! | GET    | `/runs`                      | 200     |                   |
//! | GET    | `/runs/{id}`                 | 200     | 404               |
//! | GET    | `/runs/{id}/effects`         | 200     | 404, 409, 422     |
//! | POST   | `/compare`                   | 200     | 400, 404, 422     |
//! | POST   | `/analytics/{pfnet\|tlx\|sna\|trend\|trust}` | 200 | 400, 404, 422 |
//! | POST   | `/sessions`                  | 201     | 400, 409          |
//! | GET    | `/sessions`                  | 200     |                   |
//! | DELETE | `/sessions/{clientId}`       | 204     | 404               |

use crate::runs::{RunQueue, SubmitError};
use crate::store::{Store, StoreError};
use crate::wire::{
    CompareRequest, Conflict, CreateDocument, DocumentKind, ErrorBody, Health, RunEffects, RunRequest, RunState,
    Session, UpdatePlan,
};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use wargame_core::analytics::{self, AnalyticsError};
use wargame_core::coa::compare_plans;
use wargame_core::model::Scenario;
use wargame_core::plan::{sync_matrix, Plan};
use wargame_core::run::RunResult;
use wargame_core::ValidationReport;

pub struct AppState {
    pub store: Arc<Store>,
    pub queue: RunQueue,
    pub sessions: Mutex<BTreeMap<String, Session>>,
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Conflict(Conflict),
    /// 409 without a rebase payload (live session id, unfinished run).
    Busy(String),
    Unprocessable { error: String, findings: Option<ValidationReport> },
    Unavailable(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let plain = |status: StatusCode, error: String| (status, Json(ErrorBody { error, findings: None })).into_response();
        match self {
            ApiError::BadRequest(e) => plain(StatusCode::BAD_REQUEST, e),
            ApiError::NotFound(e) => plain(StatusCode::NOT_FOUND, e),
            ApiError::Conflict(c) => (StatusCode::CONFLICT, Json(c)).into_response(),
            ApiError::Busy(e) => plain(StatusCode::CONFLICT, e),
            ApiError::Unprocessable { error, findings } => {
                (StatusCode::UNPROCESSABLE_ENTITY, Json(ErrorBody { error, findings })).into_response()
            }
            ApiError::Unavailable(e) => plain(StatusCode::SERVICE_UNAVAILABLE, e),
            ApiError::Internal(e) => plain(StatusCode::INTERNAL_SERVER_ERROR, e),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) => ApiError::NotFound(e.to_string()),
            StoreError::WrongKind { .. } => ApiError::NotFound(e.to_string()),
            StoreError::Conflict { ref current, .. } => ApiError::Conflict(Conflict {
                error: e.to_string(),
                current_version: current.version,
                payload: current.payload.clone(),
            }),
            StoreError::Invalid { message, findings } => {
                ApiError::Unprocessable { error: message, findings: Some(findings) }
            }
            StoreError::Io(_) | StoreError::Corrupt { .. } => ApiError::Internal(e.to_string()),
        }
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> Self {
        ApiError::Unprocessable { error: e.to_string(), findings: None }
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("malformed request body: {e}")))
}

/// Run store work on the blocking pool (it fsyncs).
async fn blocking<T: Send + 'static>(
    state: &Arc<AppState>,
    f: impl FnOnce(&Store) -> Result<T, StoreError> + Send + 'static,
) -> ApiResult<T> {
    let store = state.store.clone();
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(ApiError::from)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/documents", post(create_document).get(list_documents))
        .route("/documents/{id}", get(get_document).delete(delete_document))
        .route("/plans/{id}", put(update_plan))
        .route("/plans/{id}/sync-matrix", get(plan_sync_matrix))
        .route("/runs", post(start_run).get(list_runs))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/effects", get(run_effects))
        .route("/compare", post(compare))
        .route("/analytics/{kind}", post(run_analytics))
        .route("/sessions", post(open_session).get(list_sessions))
        .route("/sessions/{client_id}", axum::routing::delete(close_session))
        .with_state(state)
}

async fn health() -> Json<Health> {
    Json(Health { status: "ok".into(), version: env!("CARGO_PKG_VERSION").into() })
}

async fn create_document(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: CreateDocument = parse(&body)?;
    let doc = blocking(&state, move |s| s.create(req.kind, req.payload, req.scenario)).await?;
    Ok((StatusCode::CREATED, Json(doc.summary())))
}

#[derive(Deserialize)]
struct ListQuery {
    kind: Option<String>,
    scenario: Option<String>,
}

async fn list_documents(State(state): State<Arc<AppState>>, Query(q): Query<ListQuery>) -> ApiResult<impl IntoResponse> {
    let kind = q.kind.map(|k| k.parse::<DocumentKind>()).transpose().map_err(ApiError::BadRequest)?;
    Ok(Json(state.store.list(kind, q.scenario.as_deref())))
}

async fn get_document(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(state.store.get(&id)?))
}

async fn delete_document(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    blocking(&state, move |s| s.delete(&id)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn update_plan(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let req: UpdatePlan = parse(&body)?;
    let doc = blocking(&state, move |s| s.update_plan(&id, req.expected_version, &req.mutation, req.client_id)).await?;
    Ok(Json(doc.summary()))
}

#[derive(Deserialize)]
struct BucketQuery {
    bucket: Option<u32>,
}

pub const DEFAULT_BUCKET_TICKS: u32 = 4;

fn plan_payload(store: &Store, id: &str) -> ApiResult<Plan> {
    let doc = store.get(id)?;
    if doc.kind != DocumentKind::Plan {
        return Err(ApiError::NotFound(format!("document `{id}` is a {}, not a plan", doc.kind)));
    }
    serde_json::from_value(doc.payload).map_err(|e| ApiError::Internal(e.to_string()))
}

async fn plan_sync_matrix(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<BucketQuery>,
) -> ApiResult<impl IntoResponse> {
    let plan = plan_payload(&state.store, &id)?;
    let m = sync_matrix(&plan, q.bucket.unwrap_or(DEFAULT_BUCKET_TICKS)).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(Json(m))
}

async fn start_run(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: RunRequest = parse(&body)?;
    let record = state.queue.submit(&state.store, req).await.map_err(|e| match e {
        SubmitError::QueueFull => ApiError::Unavailable(e.to_string()),
        SubmitError::Store(e) => e.into(),
    })?;
    Ok((StatusCode::ACCEPTED, Json(record)))
}

async fn list_runs(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    Json(state.store.list_runs())
}

async fn get_run(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    state.store.get_run(&id).map(Json).ok_or_else(|| ApiError::NotFound(format!("no run `{id}`")))
}

async fn run_effects(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let record = state.store.get_run(&id).ok_or_else(|| ApiError::NotFound(format!("no run `{id}`")))?;
    match record.state {
        RunState::Pending | RunState::Running => Err(ApiError::Busy(format!("run `{id}` has not finished"))),
        RunState::Failed { reason, findings } => Err(ApiError::Unprocessable { error: reason, findings: Some(findings) }),
        RunState::Done { result_id, .. } => {
            let doc = state.store.get(&result_id)?;
            let result: RunResult = serde_json::from_value(doc.payload).map_err(|e| ApiError::Internal(e.to_string()))?;
            Ok(Json(RunEffects { run_id: id, result_id, effect_count: result.effect_count, effects: result.effects }))
        }
    }
}

async fn compare(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: CompareRequest = parse(&body)?;
    if req.plan_ids.is_empty() {
        return Err(ApiError::BadRequest("at least one plan is required".into()));
    }
    let doc = state.store.get(&req.scenario_id)?;
    if doc.kind != DocumentKind::Scenario {
        return Err(ApiError::NotFound(format!("document `{}` is a {}, not a scenario", req.scenario_id, doc.kind)));
    }
    let scenario: Scenario = serde_json::from_value(doc.payload).map_err(|e| ApiError::Internal(e.to_string()))?;
    let plans = req.plan_ids.iter().map(|id| plan_payload(&state.store, id)).collect::<ApiResult<Vec<_>>>()?;
    let detection = req.detection.unwrap_or(scenario.detection);
    let comparison = tokio::task::spawn_blocking(move || {
        let hypotheses = scenario.hypotheses().map_err(|e| ApiError::Unprocessable { error: e.to_string(), findings: None })?;
        compare_plans(&hypotheses, &plans, &req.effects.effects, &req.config, &detection)
            .map_err(|e| ApiError::Unprocessable { error: e.to_string(), findings: None })
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(comparison))
}

fn analytic<Req, Rep>(body: &[u8], f: impl Fn(&Req) -> Result<Rep, AnalyticsError>) -> ApiResult<Response>
where
    Req: DeserializeOwned,
    Rep: Serialize,
{
    let req: Req = parse(body)?;
    Ok(Json(f(&req)?).into_response())
}

async fn run_analytics(Path(kind): Path<String>, body: Bytes) -> ApiResult<Response> {
    tokio::task::spawn_blocking(move || match kind.as_str() {
        "pfnet" => analytic(&body, analytics::run_pfnet),
        "tlx" => analytic(&body, analytics::run_tlx),
        "sna" => analytic(&body, analytics::run_sna),
        "trend" => analytic(&body, analytics::run_trend),
        "trust" => analytic(&body, analytics::run_trust),
        other => Err(ApiError::NotFound(format!("unknown analytic `{other}`"))),
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn open_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let session: Session = parse(&body)?;
    if session.client_id.is_empty() {
        return Err(ApiError::BadRequest("client_id must not be empty".into()));
    }
    let mut sessions = state.sessions.lock().unwrap_or_else(|p| p.into_inner());
    if sessions.contains_key(&session.client_id) {
        return Err(ApiError::Busy(format!("client `{}` already has a live session", session.client_id)));
    }
    sessions.insert(session.client_id.clone(), session.clone());
    Ok((StatusCode::CREATED, Json(session)))
}

async fn list_sessions(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    let sessions = state.sessions.lock().unwrap_or_else(|p| p.into_inner());
    Json(sessions.values().cloned().collect::<Vec<_>>())
}

async fn close_session(State(state): State<Arc<AppState>>, Path(client_id): Path<String>) -> ApiResult<StatusCode> {
    let mut sessions = state.sessions.lock().unwrap_or_else(|p| p.into_inner());
    sessions.remove(&client_id).map(|_| StatusCode::NO_CONTENT).ok_or_else(|| ApiError::NotFound(format!("no session `{client_id}`")))
}
