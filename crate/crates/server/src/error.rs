use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use ontovec_core::Error;

/// JSON error body `{code, message, candidates?}` with a stable `code`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<String>>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code,
                message: message.into(),
                candidates: None,
            },
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::NotFound(_) | Error::UnknownIri(_) => Self::not_found(message),
            Error::AmbiguousLabel { candidates, .. } => {
                let mut err = Self::new(StatusCode::CONFLICT, "ambiguous_label", message);
                err.body.candidates = Some(candidates);
                err
            }
            Error::ZeroVector(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "zero_vector", message),
            Error::CorruptStore { .. } | Error::DimensionMismatch { .. } => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "corrupt_store", message)
            }
            Error::IoFailure { .. } => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "io_failure", message),
            _ => Self::internal(message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.body.code, message = %self.body.message, "request failed");
        }
        (self.status, Json(self.body)).into_response()
    }
}
