//! JSON-over-HTTP surface.
//!
//! | route | purpose |
//! |---|---|
//! | `GET /api/meta` | dataset shape, alpha, color domain, legend corners, active snapshots |
//! | `GET /api/hierarchy/{kind}[?snapshot=id]` | hierarchy document with default per-node stats |
//! | `POST /api/consistency` | per-node stats of `target` conditioned on an opposite selection |
//! | `POST /api/recluster` | steered rebuild of `target`; returns a job |
//! | `GET /api/recluster/{job}` | job status |
//! | `GET /api/layout` | both icicles and the center grid, coordinates in [0, 1] |
//! | `GET /img/base/{n}`, `GET /img/edit/{n}/{m}` | image files from the manifest |

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use concept_lens::cluster::HierarchyKind;
use concept_lens::consistency::corner_colors;
use concept_lens::layout::{grid_layout, icicle_layout, Orientation};
use concept_lens::Error;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::indices::parse_index_list;
use crate::report::{consistency_report, normalize_grid, normalize_icicle, LayoutPayload};
use crate::session::{Job, JobState, Session, ASYNC_THRESHOLD};

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Selection(_) | Error::Config(_) | Error::Format(_) => StatusCode::BAD_REQUEST,
            Error::Degenerate(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Shared handle; empty until the session finishes loading.
#[derive(Clone, Default)]
pub struct AppState {
    session: Arc<RwLock<Option<Arc<Session>>>>,
}

impl AppState {
    pub fn pending() -> Self {
        Self::default()
    }

    pub fn ready(session: Session) -> Self {
        let s = Self::default();
        s.install(session);
        s
    }

    pub fn install(&self, session: Session) {
        *self.session.write().unwrap() = Some(Arc::new(session));
    }

    pub fn session(&self) -> ApiResult<Arc<Session>> {
        self.session
            .read()
            .unwrap()
            .clone()
            .ok_or_else(|| ApiError::conflict("session is not initialized yet; retry shortly"))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/meta", get(meta))
        .route("/api/hierarchy/{kind}", get(hierarchy))
        .route("/api/consistency", post(consistency))
        .route("/api/recluster", post(recluster))
        .route("/api/recluster/{job}", get(job_status))
        .route("/api/layout", get(layout))
        .route("/img/base/{n}", get(base_image))
        .route("/img/edit/{n}/{m}", get(edit_image))
        .with_state(state)
}

fn parse_kind(raw: &str) -> ApiResult<HierarchyKind> {
    raw.parse().map_err(|_| ApiError::bad_request(format!("unknown hierarchy kind {raw:?}; use concept or code")))
}

async fn meta(State(app): State<AppState>) -> ApiResult<Json<serde_json::Value>> {
    let s = app.session()?;
    let h = s.store.header();
    let d = &s.domain;
    let corners: BTreeMap<&str, String> = corner_colors().into_iter().map(|(k, c)| (k, c.hex())).collect();
    Ok(Json(json!({
        "num_codes": h.num_codes,
        "num_directions": h.num_directions,
        "feature_dim": h.feature_dim,
        "latent_dim": h.latent_dim,
        "alpha": h.alpha,
        "color_domain": {
            "mean_center": d.mean_center,
            "mean_halfwidth": d.mean_halfwidth,
            "std_center": d.std_center,
            "std_halfwidth": d.std_halfwidth,
            "mean_range": d.mean_range(),
            "std_range": d.std_range(),
        },
        "corners": corners,
        "gap_max": s.gap_max,
        "depth": s.depth,
        "async_threshold": ASYNC_THRESHOLD,
        "active": {
            "concept": s.active_id(HierarchyKind::Concept),
            "code": s.active_id(HierarchyKind::Code),
        },
        "snapshots": s.snapshot_count(),
    })))
}

#[derive(Deserialize)]
struct HierarchyQuery {
    snapshot: Option<String>,
}

async fn hierarchy(State(app): State<AppState>, Path(kind): Path<String>, Query(q): Query<HierarchyQuery>) -> ApiResult<Response> {
    let s = app.session()?;
    let kind = parse_kind(&kind)?;
    let snap = match q.snapshot {
        None => s.active(kind),
        Some(id) => s
            .snapshot(&id)
            .filter(|snap| snap.hierarchy.kind == kind)
            .ok_or_else(|| ApiError::not_found(format!("no {kind} snapshot {id:?}")))?,
    };
    Ok(([(header::CONTENT_TYPE, "application/json")], snap.payload.clone()).into_response())
}

/// Node ids picked in one hierarchy snapshot.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct Selection {
    pub snapshot_id: String,
    pub node_ids: Vec<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct TargetRequest {
    /// Hierarchy to recolor or rebuild; the selection lives in the other one.
    pub target: HierarchyKind,
    pub selection: Selection,
}

/// Union of the selected nodes' leaves, checked against the active snapshot.
fn resolve(s: &Session, kind: HierarchyKind, sel: &Selection) -> ApiResult<Vec<usize>> {
    let active = s.active_id(kind);
    if sel.snapshot_id != active {
        return Err(ApiError::conflict(format!(
            "selection refers to {kind} snapshot {:?} but the active one is {active:?}; refresh the {kind} hierarchy",
            sel.snapshot_id
        )));
    }
    if sel.node_ids.is_empty() {
        return Err(ApiError::bad_request(format!("empty {kind} selection")));
    }
    let snap = s.active(kind);
    let mut leaves = Vec::new();
    for &id in &sel.node_ids {
        let node = snap.hierarchy.node(id).ok_or_else(|| ApiError::bad_request(format!("{kind} node {id} does not exist")))?;
        leaves.extend(&node.leaves);
    }
    leaves.sort_unstable();
    leaves.dedup();
    Ok(leaves)
}

async fn consistency(State(app): State<AppState>, Json(req): Json<TargetRequest>) -> ApiResult<Json<serde_json::Value>> {
    let s = app.session()?;
    let leaves = resolve(&s, req.target.opposite(), &req.selection)?;
    let target = s.active(req.target);
    let report = consistency_report(&s.grid, &s.domain, &target.hierarchy, Some(&leaves))?;
    Ok(Json(json!({
        "target": req.target,
        "selection_snapshot": req.selection.snapshot_id,
        "report": report,
    })))
}

async fn recluster(State(app): State<AppState>, Json(req): Json<TargetRequest>) -> ApiResult<Response> {
    let s = app.session()?;
    let target = req.target;
    let leaves = resolve(&s, target.opposite(), &req.selection)?;
    let job_id = format!("job-{}", uuid::Uuid::new_v4().simple());
    s.set_job(Job { job_id: job_id.clone(), target, state: JobState::Running });

    let run = {
        let s = s.clone();
        let job_id = job_id.clone();
        async move {
            let _turn = s.build_lock(target).lock().await;
            let worker = s.clone();
            let built = tokio::task::spawn_blocking(move || {
                let h = worker.build(target, Some(&leaves))?;
                worker.activate(h)
            })
            .await;
            let state = match built {
                Ok(Ok(snapshot_id)) => JobState::Done { snapshot_id },
                Ok(Err(e)) => JobState::Failed { error: e.to_string() },
                Err(e) => JobState::Failed { error: format!("build task failed: {e}") },
            };
            s.set_job(Job { job_id, target, state });
        }
    };
    if s.needs_async() {
        tokio::spawn(run);
        let job = s.job(&job_id).expect("job registered");
        return Ok((StatusCode::ACCEPTED, Json(job)).into_response());
    }
    run.await;
    let job = s.job(&job_id).expect("job registered");
    if let JobState::Failed { error } = &job.state {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, error.clone()));
    }
    Ok(Json(job).into_response())
}

async fn job_status(State(app): State<AppState>, Path(job): Path<String>) -> ApiResult<Json<Job>> {
    let s = app.session()?;
    s.job(&job).map(Json).ok_or_else(|| ApiError::not_found(format!("no recluster job {job:?}")))
}

#[derive(Deserialize)]
struct LayoutQuery {
    concept_depth: Option<usize>,
    code_depth: Option<usize>,
    /// Index lists of node ids, e.g. `3,7`. Default: the cut at the depth.
    concept_nodes: Option<String>,
    code_nodes: Option<String>,
    concept_snapshot: Option<String>,
    code_snapshot: Option<String>,
}

fn pick_depth(requested: Option<usize>, default: usize, max_depth: usize, kind: HierarchyKind) -> ApiResult<usize> {
    let limit = max_depth.max(1);
    let depth = requested.unwrap_or_else(|| default.min(limit));
    if depth == 0 || depth > limit {
        return Err(ApiError::bad_request(format!("{kind} depth {depth} outside 1..={limit}")));
    }
    Ok(depth)
}

async fn layout(State(app): State<AppState>, Query(q): Query<LayoutQuery>) -> ApiResult<Json<LayoutPayload>> {
    let s = app.session()?;
    let mut sides = Vec::with_capacity(2);
    for (kind, depth, nodes, snapshot, orientation) in [
        (HierarchyKind::Concept, q.concept_depth, &q.concept_nodes, &q.concept_snapshot, Orientation::Horizontal),
        (HierarchyKind::Code, q.code_depth, &q.code_nodes, &q.code_snapshot, Orientation::Vertical),
    ] {
        let snap = s.active(kind);
        if let Some(id) = snapshot {
            if *id != snap.hierarchy.snapshot_id {
                return Err(ApiError::conflict(format!("{kind} snapshot {id:?} is no longer active")));
            }
        }
        let depth = pick_depth(depth, s.depth, snap.hierarchy.max_depth(), kind)?;
        let icicle = icicle_layout(&snap.hierarchy, depth, s.gap_max, orientation)?;
        let selection = match nodes {
            Some(text) => parse_index_list(text)?,
            None => snap.hierarchy.cut_nodes(depth),
        };
        sides.push((snap, icicle, selection));
    }
    let (code_snap, code_icicle, code_sel) = sides.pop().unwrap();
    let (concept_snap, concept_icicle, concept_sel) = sides.pop().unwrap();
    let grid = grid_layout(&concept_snap.hierarchy, &concept_icicle, &code_snap.hierarchy, &code_icicle, &concept_sel, &code_sel)?;
    Ok(Json(LayoutPayload {
        concept_snapshot: concept_snap.hierarchy.snapshot_id.clone(),
        code_snapshot: code_snap.hierarchy.snapshot_id.clone(),
        grid: normalize_grid(&grid, &concept_icicle, &code_icicle),
        concept: normalize_icicle(&concept_icicle),
        code: normalize_icicle(&code_icicle),
    }))
}

fn content_type(path: &std::path::Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("webp") => "image/webp",
        Some("gif") => "image/gif",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

async fn send_image(s: &Session, rel: &std::path::Path, what: String) -> ApiResult<Response> {
    let path = s.images.join(rel);
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError::not_found(format!("{what}: file {} unreadable: {e}", rel.display())))?;
    Ok((
        [(header::CONTENT_TYPE, content_type(rel)), (header::CACHE_CONTROL, "public, max-age=31536000, immutable")],
        bytes,
    )
        .into_response())
}

async fn base_image(State(app): State<AppState>, Path(n): Path<usize>) -> ApiResult<Response> {
    let s = app.session()?;
    let what = format!("base image for code {n}");
    let rel = s.manifest.base.get(&n).cloned().ok_or_else(|| ApiError::not_found(format!("no {what}")))?;
    send_image(&s, &rel, what).await
}

async fn edit_image(State(app): State<AppState>, Path((n, m)): Path<(usize, usize)>) -> ApiResult<Response> {
    let s = app.session()?;
    let what = format!("edited image for code {n}, direction {m}");
    let rel = s.manifest.edited.get(&(n, m)).cloned().ok_or_else(|| ApiError::not_found(format!("no {what}")))?;
    send_image(&s, &rel, what).await
}
