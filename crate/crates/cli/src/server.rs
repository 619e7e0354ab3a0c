//! The local HTTP API.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dualtile::pipeline::{Progress, ProgressState, Scheme};
use dualtile::project::Project;
use dualtile::Error;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Mutex;

use crate::ops;

#[derive(Clone, Debug, Default, Serialize)]
struct JobStatus {
    id: Option<String>,
    running: bool,
    error: Option<String>,
}

/// Shared service state. Mutations (project edits, generation and
/// regeneration) are serialized by `writer`; generation runs on a blocking
/// worker and reports through `progress`.
pub struct AppState {
    project: RwLock<Project>,
    writer: Arc<Mutex<()>>,
    busy: AtomicBool,
    jobs: AtomicU64,
    job: RwLock<JobStatus>,
    progress: Arc<Progress>,
}

impl AppState {
    pub fn new(project: Project) -> Arc<AppState> {
        Arc::new(AppState {
            project: RwLock::new(project),
            writer: Arc::new(Mutex::new(())),
            busy: AtomicBool::new(false),
            jobs: AtomicU64::new(0),
            job: RwLock::new(JobStatus::default()),
            progress: Arc::new(Progress::default()),
        })
    }

    fn project(&self) -> Project {
        self.project.read().unwrap().clone()
    }
}

pub struct ApiError(StatusCode, String);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnknownTile(_) | Error::Missing(_) => StatusCode::NOT_FOUND,
            Error::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => StatusCode::NOT_FOUND,
            Error::Remote(_) | Error::NoConvergence { .. } | Error::Io { .. } | Error::Image(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError(code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn conflict() -> ApiError {
    ApiError(StatusCode::CONFLICT, "generation already running".into())
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

fn body<T: for<'de> Deserialize<'de> + Default>(bytes: &Bytes) -> ApiResult<T> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(bytes).map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> dualtile::Result<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/project", get(get_project).put(put_project))
        .route("/api/exemplar.png", get(get_exemplar))
        .route("/api/generate", post(post_generate))
        .route("/api/progress", get(get_progress))
        .route("/api/tiles", get(get_tiles))
        .route("/api/tiles/{file}", get(get_tile))
        .route("/api/tiles/{id}/regenerate", post(post_regenerate))
        .route("/api/preview.png", get(get_preview))
        .with_state(state)
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(project: Project, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(project))).await
}

async fn get_project(State(s): State<Arc<AppState>>) -> Json<Value> {
    Json(serde_json::to_value(s.project().config()).expect("plain data"))
}

async fn put_project(State(s): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<Json<Value>> {
    if s.busy.load(Ordering::SeqCst) {
        return Err(conflict());
    }
    let patch: Value = serde_json::from_slice(&bytes).map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
    let _guard = s.writer.lock().await;
    let mut project = s.project();
    ops::update_config(&mut project, patch)?;
    let out = serde_json::to_value(project.config()).expect("plain data");
    *s.project.write().unwrap() = project;
    Ok(Json(out))
}

async fn get_exemplar(State(s): State<Arc<AppState>>) -> ApiResult<Response> {
    let project = s.project();
    Ok(png(blocking(move || ops::exemplar_png(&project)).await?))
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateBody {
    scheme: Option<Scheme>,
}

async fn post_generate(State(s): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: GenerateBody = body(&bytes)?;
    if s.busy.compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst).is_err() {
        return Err(conflict());
    }
    let guard = s.writer.clone().lock_owned().await;
    let mut project = s.project();
    if let Some(scheme) = req.scheme {
        if let Err(e) = ops::update_config(&mut project, json!({ "scheme": scheme })) {
            s.busy.store(false, Ordering::SeqCst);
            return Err(e.into());
        }
        *s.project.write().unwrap() = project.clone();
    }
    let id = format!("job-{}", s.jobs.fetch_add(1, Ordering::SeqCst) + 1);
    *s.job.write().unwrap() = JobStatus {
        id: Some(id.clone()),
        running: true,
        error: None,
    };
    let state = s.clone();
    tokio::task::spawn_blocking(move || {
        let result = ops::generate(&project, &state.progress);
        let mut job = state.job.write().unwrap();
        job.running = false;
        job.error = result.err().map(|e| e.to_string());
        if let Some(e) = &job.error {
            log::error!("generation failed: {e}");
        }
        drop(job);
        state.busy.store(false, Ordering::SeqCst);
        drop(guard);
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "job": id }))))
}

#[derive(Serialize)]
struct ProgressBody {
    #[serde(flatten)]
    progress: ProgressState,
    job: JobStatus,
}

async fn get_progress(State(s): State<Arc<AppState>>) -> Json<ProgressBody> {
    Json(ProgressBody {
        progress: s.progress.snapshot(),
        job: s.job.read().unwrap().clone(),
    })
}

async fn get_tiles(State(s): State<Arc<AppState>>) -> ApiResult<Json<Value>> {
    let project = s.project();
    let manifest = blocking(move || Ok(project.load_tileset()?.manifest())).await?;
    Ok(Json(serde_json::to_value(manifest).expect("plain data")))
}

#[derive(Deserialize)]
struct VariantQuery {
    #[serde(default)]
    variant: usize,
}

async fn get_tile(
    State(s): State<Arc<AppState>>,
    Path(file): Path<String>,
    Query(q): Query<VariantQuery>,
) -> ApiResult<Response> {
    let id = file
        .strip_suffix(".png")
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no such resource {file}")))?
        .to_string();
    ops::parse_tile_id(&id)?;
    let project = s.project();
    Ok(png(blocking(move || ops::tile_png(&project, &id, q.variant)).await?))
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegenerateBody {
    seed: Option<u64>,
    #[serde(default)]
    defer: bool,
}

async fn post_regenerate(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult<Json<ops::Regenerated>> {
    let req: RegenerateBody = body(&bytes)?;
    ops::parse_tile_id(&id)?;
    if s.busy.load(Ordering::SeqCst) {
        return Err(conflict());
    }
    let _guard = s.writer.lock().await;
    let project = s.project();
    Ok(Json(blocking(move || ops::regenerate(&project, &id, req.seed, req.defer)).await?))
}

#[derive(Deserialize)]
struct PreviewQuery {
    tiles: Option<String>,
    seed: Option<u64>,
}

pub fn parse_dims(text: &str) -> Result<(usize, usize), String> {
    let (w, h) = text.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {text:?}"))?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width in {text:?}"))?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height in {text:?}"))?;
    if w == 0 || h == 0 || w > 256 || h > 256 {
        return Err(format!("tile grid {w}x{h} out of range"));
    }
    Ok((w, h))
}

async fn get_preview(State(s): State<Arc<AppState>>, Query(q): Query<PreviewQuery>) -> ApiResult<Response> {
    let (w, h) = parse_dims(q.tiles.as_deref().unwrap_or("4x4")).map_err(|e| ApiError(StatusCode::BAD_REQUEST, e))?;
    let seed = q.seed.unwrap_or(0);
    let project = s.project();
    Ok(png(blocking(move || ops::preview(&project, w, h, seed)).await?))
}
