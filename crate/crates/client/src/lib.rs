//! Thin typed client for the session service.
//!
//! ```no_run
//! # async fn demo() -> Result<(), wst_client::ClientError> {
//! let client = wst_client::Client::new("http://127.0.0.1:8080");
//! let created = client.create_session_text("prefix ex: <http://example.org/#>\n").await?;
//! let state = client.state(&created.id).await?;
//! # Ok(()) }
//! ```

use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;
use wst_core::api::{
    AdvanceRequest, AdvanceResponse, AuditEntry, ConflictsResponse, CreatedSession, ErrorBody, InstanceResponse,
    MergedResponse, PlanRequest, PlanResponse, ReplayReport, SelectRequest, SessionSummary, TraceResponse, UpdateStateRequest,
    UpdateStateResponse, ValidateResponse,
};
use wst_core::kb::StateSnapshot;
use wst_core::FactSet;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("{status}: {}", .body.message)]
    Api { status: StatusCode, body: ErrorBody },
    #[error("unexpected response ({status}): {message}")]
    Decode { status: StatusCode, message: String },
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Transport(e) => e.status(),
            ClientError::Api { status, .. } | ClientError::Decode { status, .. } => Some(*status),
        }
    }

    pub fn body(&self) -> Option<&ErrorBody> {
        match self {
            ClientError::Api { body, .. } => Some(body),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        Client { base: base_url.into().trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn call<T: DeserializeOwned>(&self, req: reqwest::RequestBuilder) -> Result<T, ClientError> {
        let resp = req.send().await?;
        let status = resp.status();
        let bytes = resp.bytes().await?;
        if status.is_success() {
            serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode { status, message: e.to_string() })
        } else {
            match serde_json::from_slice::<ErrorBody>(&bytes) {
                Ok(body) => Err(ClientError::Api { status, body }),
                Err(_) => Err(ClientError::Decode { status, message: String::from_utf8_lossy(&bytes).into_owned() }),
            }
        }
    }

    fn request(&self, method: Method, path: &str) -> reqwest::RequestBuilder {
        self.http.request(method, format!("{}{}", self.base, path))
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        self.call(self.request(Method::GET, path)).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        self.call(self.request(Method::POST, path).json(body)).await
    }

    pub async fn health(&self) -> Result<serde_json::Value, ClientError> {
        self.get("/health").await
    }

    /// Creates a session from `.wst` source text.
    pub async fn create_session_text(&self, source: &str) -> Result<CreatedSession, ClientError> {
        let req = self
            .request(Method::POST, "/sessions")
            .header(reqwest::header::CONTENT_TYPE, "text/plain; charset=utf-8")
            .body(source.to_string());
        self.call(req).await
    }

    /// Creates a session from an interchange document.
    pub async fn create_session_interchange(&self, document: Vec<u8>) -> Result<CreatedSession, ClientError> {
        let req = self
            .request(Method::POST, "/sessions")
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(document);
        self.call(req).await
    }

    pub async fn sessions(&self) -> Result<Vec<String>, ClientError> {
        self.get("/sessions").await
    }

    pub async fn session(&self, id: &str) -> Result<SessionSummary, ClientError> {
        self.get(&format!("/sessions/{id}")).await
    }

    pub async fn state(&self, id: &str) -> Result<StateSnapshot, ClientError> {
        self.get(&format!("/sessions/{id}/state")).await
    }

    pub async fn update_state(
        &self,
        id: &str,
        expected_version: u64,
        assert: FactSet,
        retract: FactSet,
    ) -> Result<UpdateStateResponse, ClientError> {
        self.post(&format!("/sessions/{id}/state"), &UpdateStateRequest { expected_version, assert, retract }).await
    }

    pub async fn plan(&self, id: &str, req: &PlanRequest) -> Result<PlanResponse, ClientError> {
        self.post(&format!("/sessions/{id}/plan"), req).await
    }

    pub async fn select(&self, id: &str, req: &SelectRequest) -> Result<InstanceResponse, ClientError> {
        self.post(&format!("/sessions/{id}/instances"), req).await
    }

    pub async fn validate(&self, id: &str, instance: &str) -> Result<ValidateResponse, ClientError> {
        self.get(&format!("/sessions/{id}/instances/{instance}/validate")).await
    }

    pub async fn advance(
        &self,
        id: &str,
        instance: &str,
        expected_version: u64,
        observed: FactSet,
    ) -> Result<AdvanceResponse, ClientError> {
        self.post(&format!("/sessions/{id}/instances/{instance}/advance"), &AdvanceRequest { expected_version, observed })
            .await
    }

    pub async fn trace(&self, id: &str, instance: &str) -> Result<TraceResponse, ClientError> {
        self.get(&format!("/sessions/{id}/instances/{instance}/trace")).await
    }

    pub async fn conflicts(&self, id: &str) -> Result<ConflictsResponse, ClientError> {
        self.get(&format!("/sessions/{id}/conflicts")).await
    }

    pub async fn merged(&self, id: &str) -> Result<MergedResponse, ClientError> {
        self.get(&format!("/sessions/{id}/merged")).await
    }

    pub async fn audit(&self, id: &str) -> Result<Vec<AuditEntry>, ClientError> {
        self.get(&format!("/sessions/{id}/audit")).await
    }

    /// Asks the service to replay the session's audit log from its document.
    pub async fn replay(&self, id: &str) -> Result<ReplayReport, ClientError> {
        self.get(&format!("/sessions/{id}/replay")).await
    }
}
