//! The API error body and its mapping from platform errors.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fallax_core::Error;
use serde::Serialize;

/// Every machine code the API can return, with its HTTP status.
pub const ERROR_CODES: &[(&str, u16)] = &[
    ("bad_request", 400),
    ("empty", 400),
    ("too_short", 400),
    ("too_long", 400),
    ("invalid_guess", 400),
    ("weak_password", 400),
    ("unsupported_language", 400),
    ("self_match", 400),
    ("self_report", 400),
    ("malformed_distribution", 400),
    ("unauthorized", 401),
    ("bad_credentials", 401),
    ("forbidden", 403),
    ("world_locked", 403),
    ("pvp_locked", 403),
    ("not_participant", 403),
    ("not_found", 404),
    ("unknown_user", 404),
    ("unknown_level", 404),
    ("unknown_session", 404),
    ("unknown_argument", 404),
    ("unknown_topic", 404),
    ("unknown_match", 404),
    ("unknown_report", 404),
    ("unknown_batch", 404),
    ("method_not_allowed", 405),
    ("version_conflict", 409),
    ("duplicate_judgment", 409),
    ("handle_taken", 409),
    ("wrong_round", 409),
    ("not_your_turn", 409),
    ("match_finished", 409),
    ("bot_not_owner", 409),
    ("session_completed", 409),
    ("session_incomplete", 409),
    ("already_resolved", 409),
    ("content_exhausted", 409),
    ("pool_empty", 409),
    ("rate_limited", 429),
    ("internal", 500),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message_key: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
}

impl ApiError {
    /// Builds an error for a code from [`ERROR_CODES`]; unknown codes become
    /// `internal`.
    pub fn new(code: &'static str) -> ApiError {
        match ERROR_CODES.iter().find(|(c, _)| *c == code) {
            Some((c, status)) => ApiError {
                status: StatusCode::from_u16(*status).expect("valid status"),
                code: c,
            },
            None => {
                tracing::error!(code, "error code missing from the table");
                ApiError::internal()
            }
        }
    }

    pub fn bad_request() -> ApiError {
        ApiError::new("bad_request")
    }

    pub fn unauthorized() -> ApiError {
        ApiError::new("unauthorized")
    }

    pub fn not_found() -> ApiError {
        ApiError::new("not_found")
    }

    pub fn internal() -> ApiError {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            code: self.code.to_owned(),
            message_key: format!("error.{}", self.code),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let code = e.code();
        if ERROR_CODES.iter().any(|(c, _)| *c == code) {
            ApiError::new(code)
        } else {
            // storage and configuration failures are not the client's doing
            tracing::error!(error = %e, "request failed");
            ApiError::internal()
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
