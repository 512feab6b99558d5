//! HTTP API over a cohort's tiles and its label log.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tilemil::annotation::{LabelLog, LabelRecord, TileKey};
use tilemil::pipeline::PatientTiles;
use tilemil::slide::{extract_tile, SlideImage, TileRecord, TumorLabel};

pub const PAGE_SIZE: usize = 50;

const INDEX_HTML: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>tilemil annotation</title></head>\n<body><h1>tilemil annotation</h1><p>API under <code>/api</code>: cohort, tiles, tile/&lt;slide&gt;/&lt;x&gt;/&lt;y&gt;/image.png, label, undo, progress.</p></body></html>\n";

pub struct AppState {
    tiles: Vec<(String, TileRecord)>,
    index: HashMap<TileKey, usize>,
    slides: HashMap<String, SlideImage>,
    log: Mutex<LabelLog>,
    images: RwLock<HashMap<TileKey, Bytes>>,
}

impl AppState {
    /// Tiles in cohort order, tagged with their patient id.
    pub fn new(patients: &[PatientTiles], slides: Vec<SlideImage>, log: LabelLog) -> Self {
        let tiles: Vec<(String, TileRecord)> =
            patients.iter().flat_map(|p| p.tiles.iter().map(|t| (p.patient_id.clone(), t.clone()))).collect();
        let index = tiles.iter().enumerate().map(|(i, (_, t))| ((t.slide_id.clone(), t.grid_x, t.grid_y), i)).collect();
        Self {
            tiles,
            index,
            slides: slides.into_iter().map(|s| (s.slide_id.clone(), s)).collect(),
            log: Mutex::new(log),
            images: RwLock::new(HashMap::new()),
        }
    }

    fn labeled(&self, log: &LabelLog) -> usize {
        log.state().keys().filter(|k| self.index.contains_key(*k)).count()
    }

    pub fn log_path(&self) -> std::path::PathBuf {
        self.log.lock().expect("log lock").path().to_path_buf()
    }
}

pub fn open_log(path: &Path) -> Result<LabelLog, String> {
    LabelLog::open(path).map_err(|e| format!("{}: {e}", path.display()))
}

struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn unknown_tile(slide: &str, x: u32, y: u32) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_tile", format!("no tile {slide}/{x}/{y}"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.code, "message": self.message}))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

async fn cohort(State(s): State<Arc<AppState>>) -> Json<Value> {
    let mut slides: Vec<(String, String, usize)> = Vec::new();
    for (patient, t) in &s.tiles {
        match slides.iter_mut().find(|e| e.1 == t.slide_id) {
            Some(e) => e.2 += 1,
            None => slides.push((patient.clone(), t.slide_id.clone(), 1)),
        }
    }
    let mut patients: Vec<&str> = s.tiles.iter().map(|(p, _)| p.as_str()).collect();
    patients.dedup();
    Json(json!({
        "n_patients": patients.len(),
        "n_tiles": s.tiles.len(),
        "tile_size": s.tiles.first().map(|(_, t)| t.tile_size),
        "slides": slides
            .iter()
            .map(|(p, id, n)| json!({"slide_id": id, "patient_id": p, "n_tiles": n}))
            .collect::<Vec<_>>(),
    }))
}

#[derive(Debug, Deserialize)]
struct TilesQuery {
    slide: Option<String>,
    status: Option<String>,
    page: Option<usize>,
}

#[derive(Debug, Serialize)]
struct TileCard {
    slide_id: String,
    grid_x: u32,
    grid_y: u32,
    patient_id: String,
    label: Option<TumorLabel>,
    image: String,
}

async fn tiles(State(s): State<Arc<AppState>>, Query(q): Query<TilesQuery>) -> ApiResult<Json<Value>> {
    let status = q.status.as_deref().unwrap_or("all");
    if !matches!(status, "all" | "labeled" | "unlabeled") {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", format!("unknown status `{status}`")));
    }
    if let Some(slide) = &q.slide {
        if !s.slides.contains_key(slide) {
            return Err(ApiError::new(StatusCode::NOT_FOUND, "unknown_slide", format!("no slide `{slide}`")));
        }
    }
    let page = q.page.unwrap_or(1);
    if page == 0 {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "pages start at 1"));
    }
    let log = s.log.lock().map_err(ApiError::internal)?;
    let cards: Vec<TileCard> = s
        .tiles
        .iter()
        .filter(|(_, t)| q.slide.as_ref().is_none_or(|id| *id == t.slide_id))
        .map(|(p, t)| {
            let label = log.label_of(&(t.slide_id.clone(), t.grid_x, t.grid_y));
            TileCard {
                slide_id: t.slide_id.clone(),
                grid_x: t.grid_x,
                grid_y: t.grid_y,
                patient_id: p.clone(),
                label,
                image: format!("/api/tile/{}/{}/{}/image.png", t.slide_id, t.grid_x, t.grid_y),
            }
        })
        .filter(|c| match status {
            "labeled" => c.label.is_some(),
            "unlabeled" => c.label.is_none(),
            _ => true,
        })
        .collect();
    drop(log);
    let total = cards.len();
    let page_cards: Vec<&TileCard> = cards.iter().skip((page - 1) * PAGE_SIZE).take(PAGE_SIZE).collect();
    Ok(Json(json!({
        "page": page,
        "page_size": PAGE_SIZE,
        "n_pages": total.div_ceil(PAGE_SIZE),
        "total": total,
        "tiles": page_cards,
    })))
}

async fn tile_image(State(s): State<Arc<AppState>>, UrlPath((slide, x, y)): UrlPath<(String, u32, u32)>) -> ApiResult<Response> {
    let key = (slide.clone(), x, y);
    let &i = s.index.get(&key).ok_or_else(|| ApiError::unknown_tile(&slide, x, y))?;
    let cached = s.images.read().map_err(ApiError::internal)?.get(&key).cloned();
    let png = match cached {
        Some(b) => b,
        None => {
            let t = &s.tiles[i].1;
            let src = s.slides.get(&t.slide_id).ok_or_else(|| ApiError::unknown_tile(&slide, x, y))?;
            let b = Bytes::from(extract_tile(src, t).encode_png().map_err(ApiError::internal)?);
            s.images.write().map_err(ApiError::internal)?.insert(key, b.clone());
            b
        }
    };
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelBody {
    slide: String,
    x: u32,
    y: u32,
    label: TumorLabel,
    annotator: String,
}

async fn label(State(s): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<Value>> {
    let b: LabelBody = parse_body(&body)?;
    if !s.index.contains_key(&(b.slide.clone(), b.x, b.y)) {
        return Err(ApiError::unknown_tile(&b.slide, b.x, b.y));
    }
    if b.annotator.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "annotator must not be empty"));
    }
    let record =
        LabelRecord { slide_id: b.slide, grid_x: b.x, grid_y: b.y, label: b.label, annotator: b.annotator, timestamp: now() };
    let mut log = s.log.lock().map_err(ApiError::internal)?;
    let seq = log.append_label(record).map_err(ApiError::internal)?;
    Ok(Json(json!({"seq": seq, "labeled": s.labeled(&log), "total": s.tiles.len()})))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UndoBody {
    annotator: String,
}

async fn undo(State(s): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<Value>> {
    let b: UndoBody = parse_body(&body)?;
    let mut log = s.log.lock().map_err(ApiError::internal)?;
    let undone = log.undo_last(&b.annotator, now()).map_err(|e| match e {
        tilemil::Error::NothingToUndo(_) => ApiError::new(StatusCode::CONFLICT, "nothing_to_undo", e.to_string()),
        e => ApiError::internal(e),
    })?;
    Ok(Json(json!({"undone": undone, "labeled": s.labeled(&log), "total": s.tiles.len()})))
}

async fn progress(State(s): State<Arc<AppState>>) -> ApiResult<Json<Value>> {
    let log = s.log.lock().map_err(ApiError::internal)?;
    Ok(Json(json!({"labeled": s.labeled(&log), "total": s.tiles.len()})))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/api/cohort", get(cohort))
        .route("/api/tiles", get(tiles))
        .route("/api/tile/{slide}/{x}/{y}/image.png", get(tile_image))
        .route("/api/label", post(label))
        .route("/api/undo", post(undo))
        .route("/api/progress", get(progress))
        .fallback(not_found)
        .with_state(state)
}
