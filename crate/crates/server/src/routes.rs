use std::net::SocketAddr;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::error::ApiError;
use crate::session::{Resegment, SegmentUpdate};
use crate::state::AppState;

const MAX_BODY: usize = 256 * 1024 * 1024;

/// Runs state work off the async executor; it may touch the disk.
async fn blocking<T: Send + 'static>(
    state: &AppState,
    f: impl FnOnce(&AppState) -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    let state = state.clone();
    tokio::task::spawn_blocking(move || f(&state)).await.map_err(|e| ApiError::internal(e.to_string()))?
}

#[derive(Deserialize)]
struct SubmitQuery {
    lang: Option<String>,
    threshold: Option<f64>,
}

#[derive(Deserialize)]
struct TmQuery {
    langs: Option<String>,
    format: Option<String>,
}

#[derive(Deserialize)]
struct SessionQuery {
    source: Option<String>,
    target: Option<String>,
}

#[derive(Deserialize)]
struct ListQuery {
    #[serde(default)]
    active: bool,
}

async fn list_tables(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(state.list_tables())
}

async fn get_record(State(state): State<AppState>, Path((name, rid)): Path<(String, String)>) -> Result<Response, ApiError> {
    Ok(Json(state.record(&name, &rid)?).into_response())
}

async fn post_document(
    State(state): State<AppState>,
    Query(q): Query<SubmitQuery>,
    body: String,
) -> Result<Response, ApiError> {
    let sub = blocking(&state, move |st| st.submit(&body, q.lang.as_deref(), q.threshold)).await?;
    let uri = sub.uri();
    let body = json!({
        "id": sub.id,
        "uri": uri,
        "language": sub.doc.language(),
        "threshold": sub.threshold,
        "segments": sub.matches,
    });
    Ok((StatusCode::CREATED, [(header::LOCATION, uri)], Json(body)).into_response())
}

async fn get_document(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<TmQuery>,
) -> Result<Response, ApiError> {
    let (format, body) = state.extract(&id, q.langs.as_deref(), q.format.as_deref())?;
    Ok(([(header::CONTENT_TYPE, format.content_type())], body).into_response())
}

async fn get_matches(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let sub = state.submission(&id)?;
    Ok(Json(json!({ "id": sub.id, "language": sub.doc.language(), "segments": sub.matches })).into_response())
}

async fn post_session(
    State(state): State<AppState>,
    Query(q): Query<SessionQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let summary =
        blocking(&state, move |st| st.create_session(body.to_vec(), q.source.as_deref(), q.target.as_deref())).await?;
    let uri = format!("/sessions/{}", summary.id);
    Ok((StatusCode::CREATED, [(header::LOCATION, uri)], Json(summary)).into_response())
}

async fn list_sessions(State(state): State<AppState>, Query(q): Query<ListQuery>) -> Response {
    Json(state.list_sessions(q.active)).into_response()
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(state.session_summary(&id)?).into_response())
}

async fn get_segments(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(state.segments(&id)?).into_response())
}

async fn put_segment(
    State(state): State<AppState>,
    Path((id, n)): Path<(String, usize)>,
    Json(update): Json<SegmentUpdate>,
) -> Result<Response, ApiError> {
    let row = blocking(&state, move |st| st.update_segment(&id, n, &update)).await?;
    Ok(Json(row).into_response())
}

async fn post_resegment(
    State(state): State<AppState>,
    Path((id, n)): Path<(String, usize)>,
    Json(op): Json<Resegment>,
) -> Result<Response, ApiError> {
    let rows = blocking(&state, move |st| st.resegment(&id, n, op)).await?;
    Ok(Json(rows).into_response())
}

async fn get_peer(State(state): State<AppState>, Path((id, lang)): Path<(String, String)>) -> Result<Response, ApiError> {
    Ok(Json(state.peer(&id, &lang)?).into_response())
}

async fn post_complete(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let (bytes, name) = blocking(&state, move |st| {
        let bytes = st.complete(&id)?;
        Ok((bytes, st.session_summary(&id)?.dossier))
    })
    .await?;
    let disposition = format!("attachment; filename=\"{}.med\"", name.replace(['"', '\\'], "_"));
    Ok(([(header::CONTENT_TYPE, "application/zip".to_string()), (header::CONTENT_DISPOSITION, disposition)], bytes)
        .into_response())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/tables", get(list_tables))
        .route("/tables/{name}/records/{rid}", get(get_record))
        .route("/documents", post(post_document))
        .route("/documents/{id}", get(get_document))
        .route("/documents/{id}/matches", get(get_matches))
        .route("/sessions", post(post_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/segments", get(get_segments))
        .route("/sessions/{id}/segments/{n}", put(put_segment))
        .route("/sessions/{id}/segments/{n}/resegment", post(post_resegment))
        .route("/sessions/{id}/peer/{lang}", get(get_peer))
        .route("/sessions/{id}/complete", post(post_complete))
        .layer(DefaultBodyLimit::max(MAX_BODY))
        .with_state(state)
}

/// Serves until the listener fails or `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    serve_on(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
