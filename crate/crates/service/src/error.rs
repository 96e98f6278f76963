use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use thiserror::Error;
use wst_core::api::ErrorBody;
use wst_core::dsl::{Diagnostic, DslError};
use wst_core::interchange::InterchangeError;
use wst_core::Violation;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid scenario: {message}")]
    InvalidDocument { message: String, diagnostics: Vec<Diagnostic>, violations: Vec<Violation> },
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("expected state version {expected}, session is at {actual}")]
    VersionConflict { expected: u64, actual: u64 },
    #[error(transparent)]
    Engine(#[from] wst_core::Error),
    #[error("path index {index} out of range: {available} path(s) found")]
    NoSuchPath { index: usize, available: usize },
    #[error("storage: {0}")]
    Storage(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::InvalidDocument { .. } | ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::VersionConflict { .. } => StatusCode::CONFLICT,
            ServiceError::Engine(_) | ServiceError::NoSuchPath { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ServiceError::InvalidDocument { .. } => "invalid-document",
            ServiceError::BadRequest(_) => "bad-request",
            ServiceError::NotFound(_) => "not-found",
            ServiceError::VersionConflict { .. } => "version-conflict",
            ServiceError::Engine(_) => "engine",
            ServiceError::NoSuchPath { .. } => "no-such-path",
            ServiceError::Storage(_) => "storage",
        }
    }

    pub fn body(&self) -> ErrorBody {
        let (diagnostics, violations) = match self {
            ServiceError::InvalidDocument { diagnostics, violations, .. } => (diagnostics.clone(), violations.clone()),
            _ => (Vec::new(), Vec::new()),
        };
        ErrorBody { error: self.kind().to_string(), message: self.to_string(), diagnostics, violations }
    }
}

impl From<DslError> for ServiceError {
    fn from(e: DslError) -> Self {
        ServiceError::InvalidDocument { message: e.to_string(), diagnostics: e.diagnostics(), violations: Vec::new() }
    }
}

impl From<InterchangeError> for ServiceError {
    fn from(e: InterchangeError) -> Self {
        let violations = match &e {
            InterchangeError::Validation(vs) => vs.clone(),
            InterchangeError::Schema { .. } => Vec::new(),
        };
        ServiceError::InvalidDocument { message: e.to_string(), diagnostics: Vec::new(), violations }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            tracing::error!("{self}");
        }
        (self.status(), Json(self.body())).into_response()
    }
}
