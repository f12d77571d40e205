//! Thin async client for the plan server's HTTP API.

use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use std::time::Duration;
use thiserror::Error;
use wargame_core::analytics::{
    PfnetReport, PfnetRequest, SnaReport, SnaRequest, StatResult, TlxReport, TlxRequest, TrendRequest, TrustReport,
    TrustRequest,
};
use wargame_core::coa::Comparison;
use wargame_core::plan::{PlanMutation, SyncMatrix};
use wargame_core::ValidationReport;

pub use wargame_server::wire::{
    CompareRequest, Conflict, CreateDocument, DocumentKind, DocumentSummary, ErrorBody, Health, RunEffects, RunRecord,
    RunRequest, RunState, Session, StoredDocument, UpdatePlan,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    /// 409 on a plan update: the stored version and payload to rebase on.
    #[error("version conflict: stored version is {}", .0.current_version)]
    Conflict(Conflict),
    #[error("server returned {status}: {}", body.error)]
    Api { status: u16, body: ErrorBody },
    #[error("unexpected response body: {0}")]
    Decode(String),
    #[error("run `{0}` did not finish in time")]
    Timeout(String),
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Conflict(_) => Some(409),
            ClientError::Api { status, .. } => Some(*status),
            _ => None,
        }
    }

    /// Validation findings carried by a 422 response.
    pub fn findings(&self) -> Option<&ValidationReport> {
        match self {
            ClientError::Api { body, .. } => body.findings.as_ref(),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the server root, e.g. `http://127.0.0.1:7878`.
    pub fn new(base: impl Into<String>) -> Self {
        Self { base: base.into().trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    async fn send<B: Serialize, T: DeserializeOwned>(&self, method: Method, path: &str, body: Option<&B>) -> Result<T> {
        let mut req = self.http.request(method, format!("{}{}", self.base, path));
        if let Some(b) = body {
            req = req.json(b);
        }
        let resp = req.send().await?;
        let status = resp.status();
        let bytes = resp.bytes().await?;
        if status.is_success() {
            let bytes: &[u8] = if bytes.is_empty() { b"null" } else { &bytes };
            return serde_json::from_slice(bytes).map_err(|e| ClientError::Decode(e.to_string()));
        }
        if status == StatusCode::CONFLICT {
            if let Ok(c) = serde_json::from_slice::<Conflict>(&bytes) {
                return Err(ClientError::Conflict(c));
            }
        }
        let body = serde_json::from_slice::<ErrorBody>(&bytes).unwrap_or_else(|_| ErrorBody {
            error: String::from_utf8_lossy(&bytes).into_owned(),
            findings: None,
        });
        Err(ClientError::Api { status: status.as_u16(), body })
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        self.send::<(), T>(Method::GET, path, None).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        self.send(Method::POST, path, Some(body)).await
    }

    pub async fn health(&self) -> Result<Health> {
        self.get("/health").await
    }

    pub async fn create_document(
        &self,
        kind: DocumentKind,
        payload: Value,
        scenario: Option<String>,
    ) -> Result<DocumentSummary> {
        self.post("/documents", &CreateDocument { kind, payload, scenario }).await
    }

    /// Serialize `payload` and store it as a new document.
    pub async fn create<T: Serialize>(&self, kind: DocumentKind, payload: &T) -> Result<DocumentSummary> {
        let value = serde_json::to_value(payload).map_err(|e| ClientError::Decode(e.to_string()))?;
        self.create_document(kind, value, None).await
    }

    pub async fn list_documents(&self, kind: Option<DocumentKind>, scenario: Option<&str>) -> Result<Vec<DocumentSummary>> {
        let mut params = Vec::new();
        if let Some(k) = kind {
            params.push(format!("kind={k}"));
        }
        if let Some(s) = scenario {
            params.push(format!("scenario={s}"));
        }
        let query = if params.is_empty() { String::new() } else { format!("?{}", params.join("&")) };
        self.get(&format!("/documents{query}")).await
    }

    pub async fn get_document(&self, id: &str) -> Result<StoredDocument> {
        self.get(&format!("/documents/{id}")).await
    }

    pub async fn delete_document(&self, id: &str) -> Result<()> {
        self.send::<(), Value>(Method::DELETE, &format!("/documents/{id}"), None).await.map(|_| ())
    }

    /// Versioned plan update; a stale `expected_version` yields
    /// [`ClientError::Conflict`] carrying the current state.
    pub async fn update_plan(
        &self,
        id: &str,
        expected_version: u64,
        mutation: PlanMutation,
        client_id: Option<String>,
    ) -> Result<DocumentSummary> {
        let body = UpdatePlan { expected_version, mutation, client_id };
        self.send(Method::PUT, &format!("/plans/{id}"), Some(&body)).await
    }

    pub async fn sync_matrix(&self, plan_id: &str, bucket_ticks: u32) -> Result<SyncMatrix> {
        self.get(&format!("/plans/{plan_id}/sync-matrix?bucket={bucket_ticks}")).await
    }

    pub async fn start_run(&self, request: &RunRequest) -> Result<RunRecord> {
        self.post("/runs", request).await
    }

    pub async fn get_run(&self, id: &str) -> Result<RunRecord> {
        self.get(&format!("/runs/{id}")).await
    }

    pub async fn list_runs(&self) -> Result<Vec<RunRecord>> {
        self.get("/runs").await
    }

    pub async fn run_effects(&self, id: &str) -> Result<RunEffects> {
        self.get(&format!("/runs/{id}/effects")).await
    }

    /// Poll until the run is done or failed.
    pub async fn wait_for_run(&self, id: &str, poll: Duration, timeout: Duration) -> Result<RunRecord> {
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            let record = self.get_run(id).await?;
            if record.state.is_finished() {
                return Ok(record);
            }
            if tokio::time::Instant::now() >= deadline {
                return Err(ClientError::Timeout(id.to_string()));
            }
            tokio::time::sleep(poll).await;
        }
    }

    pub async fn compare(&self, request: &CompareRequest) -> Result<Comparison> {
        self.post("/compare", request).await
    }

    pub async fn pfnet(&self, request: &PfnetRequest) -> Result<PfnetReport> {
        self.post("/analytics/pfnet", request).await
    }

    pub async fn tlx(&self, request: &TlxRequest) -> Result<TlxReport> {
        self.post("/analytics/tlx", request).await
    }

    pub async fn sna(&self, request: &SnaRequest) -> Result<SnaReport> {
        self.post("/analytics/sna", request).await
    }

    pub async fn trend(&self, request: &TrendRequest) -> Result<StatResult> {
        self.post("/analytics/trend", request).await
    }

    pub async fn trust(&self, request: &TrustRequest) -> Result<TrustReport> {
        self.post("/analytics/trust", request).await
    }

    pub async fn open_session(&self, session: &Session) -> Result<Session> {
        self.post("/sessions", session).await
    }

    pub async fn list_sessions(&self) -> Result<Vec<Session>> {
        self.get("/sessions").await
    }

    pub async fn close_session(&self, client_id: &str) -> Result<()> {
        self.send::<(), Value>(Method::DELETE, &format!("/sessions/{client_id}"), None).await.map(|_| ())
    }
}
