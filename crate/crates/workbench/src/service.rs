//! HTTP API over a [`SessionState`].
//!
//! | method | path                              | body                      |
//! |--------|-----------------------------------|---------------------------|
//! | GET    | `/healthz`                        |                           |
//! | GET    | `/dataset`                        |                           |
//! | GET    | `/students?metric=ap`             |                           |
//! | GET    | `/students/{class}/concepts?k=&sort=` |                       |
//! | GET    | `/projection?class=&k=`           |                           |
//! | POST   | `/students/{class}/tune`          | `{"instructions": [...]}` |
//! | GET    | `/students/{class}/provenance`    |                           |
//!
//! Errors come back as `{"error": ...}` with 404 (unknown class or concept),
//! 409 (class already tuning) or 422 (invalid request).

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use conceptkd_core::analytics::{MetricKind, MetricSet, SortMode};
use conceptkd_core::tuning::{cumulative_delta, ProvenanceEntry};
use serde::{Deserialize, Serialize};

use crate::api::{self, ApiError, TuneRequest};
use crate::session::SessionState;

pub const PORT_ENV: &str = "CONCEPTKD_PORT";
pub const DEFAULT_PORT: u16 = 8080;
pub const FINGERPRINT_HEADER: &str = "x-ensemble-fingerprint";

type Shared = Arc<SessionState>;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Busy(_) => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

/// JSON body tagged with the fingerprint of the ensemble it was computed from.
struct Tagged<T>(String, T);

impl<T: Serialize> IntoResponse for Tagged<T> {
    fn into_response(self) -> Response {
        let mut res = Json(self.1).into_response();
        if let Ok(v) = HeaderValue::from_str(&self.0) {
            res.headers_mut().insert(FINGERPRINT_HEADER, v);
        }
        res
    }
}

type Reply<T> = Result<Tagged<T>, ApiError>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/dataset", get(dataset))
        .route("/students", get(students))
        .route("/students/{class}/concepts", get(concepts))
        .route("/students/{class}/tune", post(tune))
        .route("/students/{class}/provenance", get(provenance))
        .route("/projection", get(projection))
        .with_state(state)
}

pub async fn serve(state: Shared, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn parse<T: std::str::FromStr>(raw: Option<&str>, default: T) -> Result<T, ApiError>
where
    T::Err: std::fmt::Display,
{
    match raw {
        None => Ok(default),
        Some(s) => s.parse().map_err(|e: T::Err| ApiError::Invalid(e.to_string())),
    }
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    fingerprint: String,
}

async fn healthz(State(s): State<Shared>) -> Reply<Health> {
    let fingerprint = s.ensemble().fingerprint();
    Ok(Tagged(fingerprint.clone(), Health { status: "ok", fingerprint }))
}

async fn dataset(State(s): State<Shared>) -> Reply<api::DatasetSummary> {
    let summary = api::dataset_summary(&s.dataset, &s.ensemble());
    Ok(Tagged(summary.fingerprint.clone(), summary))
}

#[derive(Deserialize)]
struct StudentsQuery {
    metric: Option<String>,
}

async fn students(State(s): State<Shared>, Query(q): Query<StudentsQuery>) -> Reply<api::StudentsReport> {
    let metric = parse(q.metric.as_deref(), MetricKind::Ap)?;
    let ensemble = s.ensemble();
    let report = api::students_report(&s.dataset, &ensemble, &s.config, metric)?;
    Ok(Tagged(report.fingerprint.clone(), report))
}

#[derive(Deserialize)]
struct ConceptsQuery {
    k: Option<String>,
    sort: Option<String>,
}

pub const DEFAULT_K: usize = 10;

async fn concepts(
    State(s): State<Shared>,
    Path(class): Path<String>,
    Query(q): Query<ConceptsQuery>,
) -> Reply<api::ConceptsReport> {
    let k = parse(q.k.as_deref(), DEFAULT_K)?;
    let sort = parse(q.sort.as_deref(), SortMode::Weight)?;
    let ensemble = s.ensemble();
    let report = api::concepts_report(&s.dataset, &ensemble, &s.config, &class, k, sort)?;
    Ok(Tagged(report.fingerprint.clone(), report))
}

#[derive(Deserialize)]
struct ProjectionQuery {
    class: Option<String>,
    k: Option<String>,
}

async fn projection(State(s): State<Shared>, Query(q): Query<ProjectionQuery>) -> Reply<api::ProjectionReport> {
    let k = parse(q.k.as_deref(), api::DEFAULT_HIGHLIGHT)?;
    let state = s.clone();
    let layout = tokio::task::spawn_blocking(move || state.projection().cloned())
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    let ensemble = s.ensemble();
    let report = api::projection_report(&s.dataset, &ensemble, &layout, q.class.as_deref(), k)?;
    Ok(Tagged(report.fingerprint.clone(), report))
}

async fn tune(
    State(s): State<Shared>,
    Path(class): Path<String>,
    body: Result<Json<TuneRequest>, JsonRejection>,
) -> Reply<api::TuneResponse> {
    let Json(request) = body.map_err(|e| ApiError::Invalid(e.body_text()))?;
    let response = tokio::task::spawn_blocking(move || s.tune(&class, &request))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Tagged(response.fingerprint.clone(), response))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceReport {
    pub fingerprint: String,
    pub class: String,
    pub entries: Vec<ProvenanceEntry>,
    pub cumulative: MetricSet,
}

async fn provenance(State(s): State<Shared>, Path(class): Path<String>) -> Reply<ProvenanceReport> {
    let entries = s.provenance(&class)?;
    let fingerprint = s.ensemble().fingerprint();
    Ok(Tagged(
        fingerprint.clone(),
        ProvenanceReport { fingerprint, class, cumulative: cumulative_delta(&entries), entries },
    ))
}
