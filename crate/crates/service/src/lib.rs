//! HTTP/JSON service for live comparison sessions.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/glyphs` | upload an exchange archive (raw ZIP body) |
//! | GET | `/glyphs` | list registered glyphs |
//! | GET | `/glyphs/{id}/sample/{index}.png` | one pre-rasterized sample |
//! | POST | `/sessions` | `{"glyphs": [...], "config": {...}}` |
//! | GET | `/sessions`, `/sessions/{id}` | session summaries |
//! | GET | `/sessions/{id}/next` | pending trial or finished signal |
//! | POST | `/sessions/{id}/answer` | `{"trial_token", "answer", "response_ms"}` |
//! | GET | `/sessions/{id}/results` | scores and curves |
//! | GET | `/sessions/{id}/results/{glyph}/curve.{csv,json}` | curve export |
//!
//! The staircase runs server-side; trial payloads carry only an opaque token
//! and image URLs.

mod error;
mod state;

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mglyph_core::metrics::CurveFormat;
use tower_http::services::ServeDir;

pub use error::ApiError;
pub use state::{
    glyph_id_for, results_url, sample_url, AppState, CreateSession, Feedback, GlyphResult,
    GlyphSummary, NextTrial, Progress, ServiceOptions, SessionResults, SessionSummary,
    StartupError, SubmitAnswer,
};

/// Largest accepted archive upload.
pub const MAX_UPLOAD_BYTES: usize = 1 << 30;

type Shared = State<Arc<AppState>>;

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    body.map(|Json(v)| v)
        .map_err(|e| ApiError::invalid(e.body_text()))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

async fn upload_glyph(State(app): Shared, body: Bytes) -> Result<Response, ApiError> {
    let (summary, created) = blocking(move || app.upload_glyph(&body)).await?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(summary)).into_response())
}

async fn list_glyphs(State(app): Shared) -> Json<Vec<GlyphSummary>> {
    Json(app.list_glyphs())
}

async fn sample(State(app): Shared, Path((id, file)): Path<(String, String)>) -> Result<Response, ApiError> {
    let index = file
        .strip_suffix(".png")
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| ApiError::not_found(format!("no sample {file:?}")))?;
    let png = app.sample_png(&id, index)?;
    Ok((
        [
            (header::CONTENT_TYPE, "image/png"),
            (header::CACHE_CONTROL, "public, max-age=31536000, immutable"),
        ],
        png,
    )
        .into_response())
}

async fn create_session(
    State(app): Shared,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<Response, ApiError> {
    let req = json_body(body)?;
    let summary = app.create_session(&req)?;
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn list_sessions(State(app): Shared) -> Json<Vec<SessionSummary>> {
    Json(app.list_sessions())
}

async fn get_session(State(app): Shared, Path(id): Path<String>) -> Result<Json<SessionSummary>, ApiError> {
    app.session_summary(&id).map(Json)
}

async fn next(State(app): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    let view = app.next(&id)?;
    Ok(([(header::CACHE_CONTROL, "no-store")], Json(view)).into_response())
}

async fn answer(
    State(app): Shared,
    Path(id): Path<String>,
    body: Result<Json<SubmitAnswer>, JsonRejection>,
) -> Result<Json<Feedback>, ApiError> {
    let req = json_body(body)?;
    app.answer(&id, &req).map(Json)
}

async fn results(State(app): Shared, Path(id): Path<String>) -> Result<Json<SessionResults>, ApiError> {
    blocking(move || app.results(&id)).await.map(Json)
}

async fn curve(
    State(app): Shared,
    Path((id, glyph, file)): Path<(String, String, String)>,
) -> Result<Response, ApiError> {
    let (format, mime) = match file.as_str() {
        "curve.csv" => (CurveFormat::Csv, "text/csv; charset=utf-8"),
        "curve.json" => (CurveFormat::Json, "application/json"),
        _ => return Err(ApiError::not_found(format!("no export {file:?}"))),
    };
    let text = blocking(move || app.curve(&id, &glyph, format)).await?;
    Ok(([(header::CONTENT_TYPE, mime)], text).into_response())
}

/// The API routes.
pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route(
            "/glyphs",
            post(upload_glyph)
                .get(list_glyphs)
                .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES)),
        )
        .route("/glyphs/{id}/sample/{file}", get(sample))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/results", get(results))
        .route("/sessions/{id}/results/{glyph}/{file}", get(curve))
        .with_state(app)
}

/// The API plus static assets served for every other path. A missing
/// directory is reported back instead of failing, so the API still comes up.
pub fn router_with_static(app: Arc<AppState>, static_dir: Option<PathBuf>) -> (Router, Option<String>) {
    let api = router(app);
    match static_dir {
        None => (api, None),
        Some(dir) if dir.is_dir() => (api.fallback_service(ServeDir::new(dir)), None),
        Some(dir) => (
            api,
            Some(format!("static directory {} not found; serving the API only", dir.display())),
        ),
    }
}

/// Serves `app` until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}
