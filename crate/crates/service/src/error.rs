use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use mglyph_core::exchange::{ExchangeError, ValidationReport};
use mglyph_core::store::StoreError;
use serde_json::json;

/// An error answered as JSON `{"error": kind, "message": ..., "report": ...}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
    pub report: Option<ValidationReport>,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            kind,
            message: message.into(),
            report: None,
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not found", message)
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid request", message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal error", message)
    }

    pub fn archive(err: ExchangeError, report: ValidationReport) -> Self {
        let (status, kind) = match &err {
            ExchangeError::Format(_) => (StatusCode::BAD_REQUEST, "format error"),
            ExchangeError::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation error"),
            ExchangeError::Integrity(_) => (StatusCode::UNPROCESSABLE_ENTITY, "integrity error"),
            ExchangeError::Io(_) | ExchangeError::Render(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal error")
            }
        };
        ApiError {
            status,
            kind,
            message: err.to_string(),
            report: Some(report),
        }
    }

    pub fn store(err: StoreError) -> Self {
        match err {
            StoreError::NotFound(_) => Self::not_found(err.to_string()),
            StoreError::State { .. } | StoreError::Sequence { .. } | StoreError::Exists(_) => {
                Self::conflict(err.to_string())
            }
            StoreError::InvalidId(_) | StoreError::Glyph { .. } => Self::invalid(err.to_string()),
            StoreError::Io(_) | StoreError::Corrupt { .. } => Self::internal(err.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.kind, "message": self.message });
        if let Some(report) = self.report {
            body["report"] = serde_json::to_value(report).unwrap_or_default();
        }
        (self.status, Json(body)).into_response()
    }
}
