//! HTTP surface over [`ExperimentService`].

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cogprior_core::io::write_targets;
use serde::Deserialize;

use crate::error::ServiceError;
use crate::service::{ChoiceRequest, ExperimentService};

pub type SharedService = Arc<Mutex<ExperimentService>>;

#[derive(Deserialize)]
struct CreateSession {
    participant_id: String,
}

#[derive(Deserialize)]
struct AggregateQuery {
    #[serde(default)]
    format: Option<String>,
    /// Comma-separated problem ids.
    #[serde(default)]
    problems: Option<String>,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::UnknownProblem(_) | ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::TrialsExhausted(_)
            | ServiceError::OutOfOrder { .. }
            | ServiceError::SessionClosed(_)
            | ServiceError::Incomplete { .. } => StatusCode::CONFLICT,
            ServiceError::EmptyPool | ServiceError::PoolTooSmall { .. } => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::Export(_) | ServiceError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

fn lock(state: &SharedService) -> std::sync::MutexGuard<'_, ExperimentService> {
    state.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

async fn create_session(
    State(state): State<SharedService>,
    Json(body): Json<CreateSession>,
) -> Result<impl IntoResponse, ServiceError> {
    let summary = lock(&state).create_session(&body.participant_id)?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn get_session(
    State(state): State<SharedService>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(lock(&state).summary(&id)?))
}

async fn next_trial(
    State(state): State<SharedService>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(lock(&state).next_trial(&id)?))
}

async fn submit_choice(
    State(state): State<SharedService>,
    Path(id): Path<String>,
    Json(body): Json<ChoiceRequest>,
) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(lock(&state).submit_choice(&id, &body)?))
}

async fn finalize(
    State(state): State<SharedService>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(lock(&state).finalize(&id)?))
}

async fn aggregates(
    State(state): State<SharedService>,
    Query(q): Query<AggregateQuery>,
) -> Result<Response, ServiceError> {
    let filter: Option<Vec<String>> = q
        .problems
        .map(|p| p.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect());
    let records = lock(&state).aggregate(filter.as_deref());
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(records).into_response()),
        Some("csv") => {
            let mut buf = Vec::new();
            write_targets(&mut buf, &records).map_err(|e| ServiceError::Export(e.to_string()))?;
            Ok(([(header::CONTENT_TYPE, "text/csv")], buf).into_response())
        }
        Some(other) => Err(ServiceError::BadRequest(format!("unknown format {other:?}"))),
    }
}

pub fn router(state: SharedService) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/next", get(next_trial))
        .route("/sessions/{id}/choices", post(submit_choice))
        .route("/sessions/{id}/finalize", post(finalize))
        .route("/aggregates", get(aggregates))
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(service: ExperimentService, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(Mutex::new(service)))).await
}
