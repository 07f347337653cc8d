//! HTTP surface over [`Engine`].
//!
//! | Method | Path | Body / query | Response |
//! |---|---|---|---|
//! | POST | `/api/explore` | `{query, filters?, limit?, topic_mode?}` | exploration result, `x-isle-cache: hit\|miss` |
//! | POST | `/api/search` | `{query, filters?, limit?}` | fused results |
//! | GET | `/api/graph/{query_id}` | | `graph.json` |
//! | GET | `/api/analytics/{query_id}` | | `analytics.json` |
//! | GET | `/api/paper/{paper_id}` | `?query_id=` | paper metadata with graph-local impact |
//! | GET | `/api/health` | | `{"status":"ok","papers":N}` |

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

use crate::error::{ErrorClass, IsleError};
use crate::pipeline::{Engine, ExploreRequest, SearchRequest, ANALYTICS_FILE, GRAPH_FILE};

pub const CACHE_HEADER: &str = "x-isle-cache";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
}

pub struct ApiError(IsleError);

impl From<IsleError> for ApiError {
    fn from(e: IsleError) -> Self {
        ApiError(e)
    }
}

pub fn status_of(e: &IsleError) -> StatusCode {
    match e.class() {
        ErrorClass::Usage => StatusCode::BAD_REQUEST,
        ErrorClass::NotFound => StatusCode::NOT_FOUND,
        ErrorClass::Conflict => StatusCode::CONFLICT,
        ErrorClass::Data | ErrorClass::Internal => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = status_of(&self.0);
        let error = match status {
            StatusCode::BAD_REQUEST => "bad_request",
            StatusCode::NOT_FOUND => "not_found",
            StatusCode::CONFLICT => "conflict",
            _ => "internal",
        };
        (status, Json(ErrorBody { error: error.into(), detail: self.0.to_string() })).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, IsleError> {
    serde_json::from_slice(body).map_err(|e| IsleError::BadRequest(format!("malformed request body: {e}")))
}

/// Runs `f` on the blocking pool.
async fn blocking<T, F>(engine: Arc<Engine>, f: F) -> Result<T, IsleError>
where
    F: FnOnce(&Engine) -> Result<T, IsleError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&engine)).await.map_err(|e| IsleError::Data(format!("worker failed: {e}")))?
}

fn json_bytes(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))], bytes).into_response()
}

async fn explore(State(engine): State<Arc<Engine>>, body: Bytes) -> ApiResult<Response> {
    let req: ExploreRequest = parse_body(&body)?;
    let (result, cache) = blocking(engine, move |e| {
        e.reload()?;
        e.explore(&req)
    })
    .await?;
    let mut response = Json(result.as_ref()).into_response();
    response.headers_mut().insert(CACHE_HEADER, HeaderValue::from_static(cache.as_str()));
    Ok(response)
}

async fn search(State(engine): State<Arc<Engine>>, body: Bytes) -> ApiResult<Response> {
    let req: SearchRequest = parse_body(&body)?;
    let result = blocking(engine, move |e| {
        e.reload()?;
        e.search(&req)
    })
    .await?;
    Ok(Json(result).into_response())
}

async fn graph(State(engine): State<Arc<Engine>>, Path(query_id): Path<String>) -> ApiResult<Response> {
    Ok(json_bytes(engine.artifact(&query_id, GRAPH_FILE)?))
}

async fn analytics(State(engine): State<Arc<Engine>>, Path(query_id): Path<String>) -> ApiResult<Response> {
    Ok(json_bytes(engine.artifact(&query_id, ANALYTICS_FILE)?))
}

#[derive(Debug, Deserialize)]
struct PaperQuery {
    query_id: Option<String>,
}

async fn paper(
    State(engine): State<Arc<Engine>>,
    Path(paper_id): Path<String>,
    Query(q): Query<PaperQuery>,
) -> ApiResult<Response> {
    let detail = blocking(engine, move |e| e.paper(&paper_id, q.query_id.as_deref())).await?;
    Ok(Json(detail).into_response())
}

async fn health(State(engine): State<Arc<Engine>>) -> Response {
    Json(engine.health()).into_response()
}

async fn fallback() -> ApiError {
    ApiError(IsleError::NotFound("no such endpoint".into()))
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/api/explore", post(explore))
        .route("/api/search", post(search))
        .route("/api/graph/{query_id}", get(graph))
        .route("/api/analytics/{query_id}", get(analytics))
        .route("/api/paper/{paper_id}", get(paper))
        .route("/api/health", get(health))
        .fallback(fallback)
        .with_state(engine)
}

/// Serves until `shutdown` resolves, then lets in-flight requests finish.
pub async fn serve(
    engine: Arc<Engine>,
    listener: TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(engine)).with_graceful_shutdown(shutdown).await
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
