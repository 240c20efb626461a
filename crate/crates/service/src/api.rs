//! JSON-over-HTTP interface used by the browser client.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use framelabel_core::annotation::{
    hit_test, magnifier_view, Annotation, BBox, BoxId, FrameAnnotations, Handle, Hit, ImageSize,
    MagnifierView,
};
use framelabel_core::augment::AugmentationConfig;
use framelabel_core::autolabel::{AutoLabelConfig, FrameSummary};
use framelabel_core::formats::ExportFormat;
use framelabel_core::propagation::{PropagationPolicy, PropagationRequest, PropagationSummary};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ServiceError;
use crate::i18n::{env_locale, resolve_locale};
use crate::project::{BoxInput, FrameInfo, ProjectSettings};
use crate::service::{make_fid, Service};

pub type AppState = Arc<Service>;

/// Error body: `{"error": {"code", "status", "message"}}`.
#[derive(Debug)]
pub struct ApiError(pub ServiceError);

impl<E: Into<ServiceError>> From<E> for ApiError {
    fn from(e: E) -> Self {
        Self(e.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = json!({
            "error": {
                "code": self.0.code(),
                "status": status.as_u16(),
                "message": self.0.to_string(),
            }
        });
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs blocking engine work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(ServiceError::Internal(e.to_string())))?
        .map_err(ApiError)
}

pub fn router(service: AppState) -> Router {
    Router::new()
        .route("/api/projects", post(open_project).get(list_projects))
        .route("/api/projects/{id}", get(project_summary).delete(close_project))
        .route("/api/projects/{id}/save", post(save_project))
        .route("/api/projects/{id}/frames", get(list_frames))
        .route("/api/projects/{id}/classes", get(list_classes).post(add_class))
        .route("/api/projects/{id}/settings", get(get_settings).put(put_settings))
        .route("/api/projects/{id}/undo", post(undo))
        .route("/api/projects/{id}/redo", post(redo))
        .route("/api/projects/{id}/propagate", post(propagate))
        .route("/api/projects/{id}/export", post(export))
        .route("/api/projects/{id}/jobs/augment", post(start_augment))
        .route("/api/projects/{id}/jobs/autolabel", post(start_autolabel))
        .route(
            "/api/projects/{id}/prompts",
            get(list_prompts).post(add_prompt).delete(clear_prompts),
        )
        .route("/api/projects/{id}/prompts/{pid}", delete(remove_prompt))
        .route("/api/jobs", get(list_jobs))
        .route("/api/jobs/{jid}", get(job_status).delete(cancel_job))
        .route(
            "/api/frames/{fid}/annotations",
            get(get_annotations).put(put_annotations).post(create_annotation),
        )
        .route(
            "/api/frames/{fid}/annotations/{box_id}",
            axum::routing::patch(update_annotation).delete(delete_annotation),
        )
        .route("/api/frames/{fid}/image", get(frame_image))
        .route("/api/frames/{fid}/magnifier", get(magnifier))
        .route("/api/frames/{fid}/hit", get(hit))
        .route("/api/i18n/{locale}", get(i18n))
        .with_state(service)
}

// ---- projects ----

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpenRequest {
    root: PathBuf,
    #[serde(default)]
    format: Option<ExportFormat>,
    #[serde(default)]
    voc_zero_based: Option<bool>,
}

#[derive(Debug, Serialize)]
struct ProjectSummary {
    project_id: String,
    root: String,
    format: ExportFormat,
    frame_count: usize,
    classes: Vec<ClassView>,
    warnings: Vec<crate::project::FileWarning>,
    autosave: crate::autosave::AutosaveStatus,
}

#[derive(Debug, Serialize)]
struct ClassView {
    class_id: u32,
    name: String,
    color: String,
}

fn summary(p: &crate::project::Project) -> ProjectSummary {
    ProjectSummary {
        project_id: p.id().to_string(),
        root: p.root().display().to_string(),
        format: p.format(),
        frame_count: p.frame_count(),
        classes: class_views(p),
        warnings: p.warnings().to_vec(),
        autosave: p.autosave_status(),
    }
}

fn class_views(p: &crate::project::Project) -> Vec<ClassView> {
    let registry = p.classes();
    registry
        .iter()
        .map(|(class_id, name)| ClassView {
            class_id,
            name: name.to_string(),
            color: registry.color(class_id).map(|c| c.to_hex()).unwrap_or_default(),
        })
        .collect()
}

async fn open_project(State(s): State<AppState>, Json(req): Json<OpenRequest>) -> ApiResult<impl IntoResponse> {
    let out = blocking(move || {
        let p = s.open(&req.root, req.format, req.voc_zero_based)?;
        Ok(summary(&p))
    })
    .await?;
    Ok((StatusCode::CREATED, Json(out)))
}

async fn list_projects(State(s): State<AppState>) -> Json<Vec<ProjectSummary>> {
    Json(s.projects().iter().map(|p| summary(p)).collect())
}

async fn project_summary(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ProjectSummary>> {
    let p = s.project(&id)?;
    Ok(Json(summary(&p)))
}

async fn close_project(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    blocking(move || s.close(&id)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn save_project(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ProjectSummary>> {
    let out = blocking(move || {
        let p = s.project(&id)?;
        p.save()?;
        Ok(summary(&p))
    })
    .await?;
    Ok(Json(out))
}

#[derive(Debug, Serialize)]
struct FrameEntry {
    fid: String,
    #[serde(flatten)]
    info: FrameInfo,
}

async fn list_frames(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<FrameEntry>>> {
    let p = s.project(&id)?;
    Ok(Json(
        p.frames()
            .into_iter()
            .map(|info| FrameEntry {
                fid: make_fid(p.id(), info.index),
                info,
            })
            .collect(),
    ))
}

async fn list_classes(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<ClassView>>> {
    let p = s.project(&id)?;
    Ok(Json(class_views(&p)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassRequest {
    name: String,
}

async fn add_class(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<ClassRequest>,
) -> ApiResult<impl IntoResponse> {
    let p = s.project(&id)?;
    let class_id = p.add_class(&req.name)?;
    let color = p.classes().color(class_id).map(|c| c.to_hex()).unwrap_or_default();
    Ok((
        StatusCode::CREATED,
        Json(ClassView {
            class_id,
            name: req.name,
            color,
        }),
    ))
}

async fn get_settings(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ProjectSettings>> {
    Ok(Json(s.project(&id)?.settings()))
}

async fn put_settings(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(settings): Json<ProjectSettings>,
) -> ApiResult<Json<ProjectSettings>> {
    let p = s.project(&id)?;
    p.set_settings(settings)?;
    Ok(Json(p.settings()))
}

// ---- frames ----

#[derive(Debug, Serialize)]
struct FrameView {
    fid: String,
    frame_id: String,
    image_path: String,
    image_size: ImageSize,
    revision: u64,
    annotations: Vec<Annotation>,
}

fn frame_view(project_id: &str, index: usize, f: FrameAnnotations) -> FrameView {
    FrameView {
        fid: make_fid(project_id, index),
        frame_id: f.frame_id,
        image_path: f.image_path,
        image_size: f.image_size,
        revision: f.revision,
        annotations: f.annotations,
    }
}

fn etag(revision: u64) -> HeaderValue {
    HeaderValue::from_str(&format!("\"{revision}\"")).expect("ascii")
}

fn with_etag<T: Serialize>(status: StatusCode, revision: u64, body: T) -> Response {
    let mut r = (status, Json(body)).into_response();
    r.headers_mut().insert(header::ETAG, etag(revision));
    r
}

/// Revision named by `If-Match`, if any. `*` matches every revision.
fn if_match(headers: &HeaderMap) -> Result<Option<u64>, ServiceError> {
    let Some(v) = headers.get(header::IF_MATCH) else {
        return Ok(None);
    };
    let text = v
        .to_str()
        .map_err(|_| ServiceError::Validation("If-Match is not ASCII".into()))?
        .trim();
    if text == "*" {
        return Ok(None);
    }
    let text = text.strip_prefix("W/").unwrap_or(text).trim_matches('"');
    text.parse()
        .map(Some)
        .map_err(|_| ServiceError::Validation(format!("If-Match {text:?} is not a revision")))
}

async fn get_annotations(State(s): State<AppState>, Path(fid): Path<String>) -> ApiResult<Response> {
    let (p, index) = s.frame(&fid)?;
    let f = p.frame(index)?;
    Ok(with_etag(StatusCode::OK, f.revision, frame_view(p.id(), index, f)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReplaceRequest {
    annotations: Vec<BoxInput>,
}

async fn put_annotations(
    State(s): State<AppState>,
    Path(fid): Path<String>,
    headers: HeaderMap,
    Json(req): Json<ReplaceRequest>,
) -> ApiResult<Response> {
    let (p, index) = s.frame(&fid)?;
    let expected = if_match(&headers)?;
    let f = p.replace_boxes(index, expected, req.annotations)?;
    Ok(with_etag(StatusCode::OK, f.revision, frame_view(p.id(), index, f)))
}

#[derive(Debug, Serialize)]
struct MutationResponse {
    revision: u64,
    annotation: Option<Annotation>,
    frame: FrameView,
}

fn mutation(p: &crate::project::Project, index: usize, status: StatusCode, annotation: Option<Annotation>, f: FrameAnnotations) -> Response {
    let revision = f.revision;
    with_etag(
        status,
        revision,
        MutationResponse {
            revision,
            annotation,
            frame: frame_view(p.id(), index, f),
        },
    )
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    class_id: u32,
    bbox: BBox,
}

async fn create_annotation(
    State(s): State<AppState>,
    Path(fid): Path<String>,
    headers: HeaderMap,
    Json(req): Json<CreateRequest>,
) -> ApiResult<Response> {
    let (p, index) = s.frame(&fid)?;
    let expected = if_match(&headers)?;
    let (a, f) = p.edit_frame(index, expected, |frame, registry| {
        Ok(frame.create_box(registry, req.class_id, req.bbox)?)
    })?;
    Ok(mutation(&p, index, StatusCode::CREATED, Some(a), f))
}

/// Partial update of one box: translate, drag a handle and/or relabel.
#[derive(Debug, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
enum UpdateRequest {
    Move { dx: f64, dy: f64 },
    Resize { handle: Handle, dx: f64, dy: f64 },
    Relabel { class_id: u32 },
}

async fn update_annotation(
    State(s): State<AppState>,
    Path((fid, box_id)): Path<(String, u64)>,
    headers: HeaderMap,
    Json(req): Json<UpdateRequest>,
) -> ApiResult<Response> {
    let (p, index) = s.frame(&fid)?;
    let expected = if_match(&headers)?;
    let id = BoxId(box_id);
    let (a, f) = p.edit_frame(index, expected, |frame, registry| {
        Ok(match req {
            UpdateRequest::Move { dx, dy } => frame.move_box(id, dx, dy)?,
            UpdateRequest::Resize { handle, dx, dy } => frame.resize_box(id, handle, dx, dy)?,
            UpdateRequest::Relabel { class_id } => frame.relabel(registry, id, class_id)?,
        })
    })?;
    Ok(mutation(&p, index, StatusCode::OK, Some(a), f))
}

async fn delete_annotation(
    State(s): State<AppState>,
    Path((fid, box_id)): Path<(String, u64)>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let (p, index) = s.frame(&fid)?;
    let expected = if_match(&headers)?;
    let (a, f) = p.edit_frame(index, expected, |frame, _| Ok(frame.delete_box(BoxId(box_id))?))?;
    Ok(mutation(&p, index, StatusCode::OK, Some(a), f))
}

#[derive(Debug, Deserialize)]
struct FrameQuery {
    frame: String,
}

async fn history(s: AppState, id: String, q: FrameQuery, redo: bool) -> ApiResult<Response> {
    let (p, index) = s.frame(&q.frame)?;
    if p.id() != id {
        return Err(ServiceError::not_found("frame", q.frame).into());
    }
    let f = if redo { p.redo(index)? } else { p.undo(index)? };
    Ok(mutation(&p, index, StatusCode::OK, None, f))
}

async fn undo(State(s): State<AppState>, Path(id): Path<String>, Query(q): Query<FrameQuery>) -> ApiResult<Response> {
    history(s, id, q, false).await
}

async fn redo(State(s): State<AppState>, Path(id): Path<String>, Query(q): Query<FrameQuery>) -> ApiResult<Response> {
    history(s, id, q, true).await
}

// ---- propagation and export ----

/// Targets are either explicit frame ids or the next `count` frames.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PropagateRequest {
    source: String,
    #[serde(default)]
    targets: Option<Vec<String>>,
    #[serde(default)]
    count: Option<usize>,
    #[serde(default)]
    box_ids: Option<Vec<BoxId>>,
    #[serde(default)]
    policy: PropagationPolicy,
}

#[derive(Debug, Serialize)]
struct PropagatedFrame {
    fid: String,
    #[serde(flatten)]
    summary: PropagationSummary,
}

fn local_frame(s: &Service, project_id: &str, fid: &str) -> Result<(Arc<crate::project::Project>, usize), ServiceError> {
    let (p, index) = s.frame(fid)?;
    if p.id() != project_id {
        return Err(ServiceError::Validation(format!("frame {fid} belongs to another project")));
    }
    Ok((p, index))
}

async fn propagate(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<PropagateRequest>,
) -> ApiResult<Json<Vec<PropagatedFrame>>> {
    let (p, source) = local_frame(&s, &id, &req.source)?;
    let source_frame_id = p.frame(source)?.frame_id;
    let summaries = match (req.targets, req.count) {
        (Some(targets), None) => {
            let target_frame_ids = targets
                .iter()
                .map(|t| Ok(p.frame(local_frame(&s, &id, t)?.1)?.frame_id))
                .collect::<Result<Vec<_>, ServiceError>>()?;
            p.propagate(&PropagationRequest {
                source_frame_id,
                target_frame_ids,
                box_ids: req.box_ids,
                policy: req.policy,
            })?
        }
        (None, Some(count)) => p.propagate_range(&source_frame_id, count, req.box_ids, req.policy)?,
        _ => {
            return Err(ServiceError::Validation("give exactly one of targets or count".into()).into());
        }
    };
    Ok(Json(
        summaries
            .into_iter()
            .map(|summary| PropagatedFrame {
                fid: make_fid(p.id(), p.index_of(&summary.target_frame_id).unwrap_or_default()),
                summary,
            })
            .collect(),
    ))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExportRequest {
    format: ExportFormat,
    out_dir: PathBuf,
}

async fn export(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<ExportRequest>,
) -> ApiResult<Json<Value>> {
    let p = s.project(&id)?;
    let files = blocking(move || p.export(req.format, &req.out_dir)).await?;
    Ok(Json(json!({ "files": files })))
}

// ---- jobs ----

async fn start_augment(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<AugmentationConfig>>,
) -> ApiResult<impl IntoResponse> {
    let p = s.project(&id)?;
    let config = body.map(|Json(c)| c).unwrap_or_else(|| p.settings().augmentation);
    config.validate()?;
    let status = s.jobs().submit("augment", &id, move |ctx| {
        let report = p.augment(&config, &|| ctx.is_cancelled(), &|d, t| ctx.progress(d, t))?;
        Ok(serde_json::to_value(report).expect("report serializes"))
    })?;
    Ok((StatusCode::ACCEPTED, Json(status)))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AutolabelRequest {
    /// API frame ids; all frames when absent.
    frames: Option<Vec<String>>,
    config: Option<AutoLabelConfig>,
}

#[derive(Debug, Serialize)]
struct LabeledFrame {
    fid: String,
    #[serde(flatten)]
    summary: FrameSummary,
}

async fn start_autolabel(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<AutolabelRequest>>,
) -> ApiResult<impl IntoResponse> {
    let p = s.project(&id)?;
    let req = body.map(|Json(r)| r).unwrap_or_default();
    let indices = match &req.frames {
        Some(fids) => fids
            .iter()
            .map(|f| Ok(local_frame(&s, &id, f)?.1))
            .collect::<Result<Vec<_>, ServiceError>>()?,
        None => (0..p.frame_count()).collect(),
    };
    let config = req.config.unwrap_or_else(|| p.settings().autolabel);
    config.validate()?;
    if p.prompts().is_empty() {
        return Err(framelabel_core::autolabel::AutolabelError::EmptyPromptStore.into());
    }
    let status = s.jobs().submit("autolabel", &id, move |ctx| {
        let summaries = p.autolabel(&indices, &config, &|| ctx.is_cancelled(), &|d, t| ctx.progress(d, t))?;
        let frames: Vec<LabeledFrame> = summaries
            .into_iter()
            .map(|summary| LabeledFrame {
                fid: make_fid(p.id(), p.index_of(&summary.frame_id).unwrap_or_default()),
                summary,
            })
            .collect();
        Ok(json!({ "frames": frames }))
    })?;
    Ok((StatusCode::ACCEPTED, Json(status)))
}

async fn list_jobs(State(s): State<AppState>) -> Json<Vec<crate::jobs::JobStatus>> {
    Json(s.jobs().list())
}

async fn job_status(State(s): State<AppState>, Path(jid): Path<String>) -> ApiResult<Json<crate::jobs::JobStatus>> {
    Ok(Json(s.jobs().status(&jid)?))
}

async fn cancel_job(State(s): State<AppState>, Path(jid): Path<String>) -> ApiResult<Json<crate::jobs::JobStatus>> {
    Ok(Json(s.jobs().cancel(&jid)?))
}

// ---- prompts ----

#[derive(Debug, Serialize)]
struct PromptView {
    prompt_id: u64,
    class_id: u32,
    source_frame_id: String,
    bbox: BBox,
}

async fn list_prompts(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let store = s.project(&id)?.prompts();
    let prompts: Vec<PromptView> = store
        .iter()
        .map(|p| PromptView {
            prompt_id: p.prompt_id,
            class_id: p.class_id,
            source_frame_id: p.source_frame_id.clone(),
            bbox: p.bbox,
        })
        .collect();
    Ok(Json(json!({ "dimension": store.dimension(), "prompts": prompts })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PromptRequest {
    class_id: u32,
    /// API frame id of the image holding the exemplar.
    frame: String,
    bbox: BBox,
}

async fn add_prompt(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<PromptRequest>,
) -> ApiResult<impl IntoResponse> {
    let (p, index) = local_frame(&s, &id, &req.frame)?;
    let prompt = blocking(move || p.add_prompt(req.class_id, index, req.bbox)).await?;
    Ok((
        StatusCode::CREATED,
        Json(PromptView {
            prompt_id: prompt.prompt_id,
            class_id: prompt.class_id,
            source_frame_id: prompt.source_frame_id,
            bbox: prompt.bbox,
        }),
    ))
}

#[derive(Debug, Deserialize)]
struct ClearQuery {
    class_id: Option<u32>,
}

async fn clear_prompts(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ClearQuery>,
) -> ApiResult<Json<Value>> {
    let removed = s.project(&id)?.clear_prompts(q.class_id);
    Ok(Json(json!({ "removed": removed })))
}

async fn remove_prompt(State(s): State<AppState>, Path((id, pid)): Path<(String, u64)>) -> ApiResult<Json<Value>> {
    let removed = s.project(&id)?.remove_prompt(pid)?;
    Ok(Json(json!({ "removed": 1, "prompt_id": removed.prompt_id })))
}

// ---- images and view math ----

fn content_type(path: &std::path::Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("bmp") => "image/bmp",
        Some("webp") => "image/webp",
        _ => "application/octet-stream",
    }
}

async fn frame_image(State(s): State<AppState>, Path(fid): Path<String>) -> ApiResult<Response> {
    let (p, index) = s.frame(&fid)?;
    let path = p.image_file(index)?;
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ServiceError::io(&path, e))?;
    Ok(([(header::CONTENT_TYPE, content_type(&path))], Body::from(bytes)).into_response())
}

#[derive(Debug, Deserialize)]
struct MagnifierQuery {
    x: f64,
    y: f64,
    zoom: f64,
    size: u32,
}

async fn magnifier(
    State(s): State<AppState>,
    Path(fid): Path<String>,
    Query(q): Query<MagnifierQuery>,
) -> ApiResult<Json<MagnifierView>> {
    let (p, index) = s.frame(&fid)?;
    let size = p.frame(index)?.image_size;
    Ok(Json(magnifier_view((q.x, q.y), size, q.zoom, q.size)?))
}

#[derive(Debug, Deserialize)]
struct HitQuery {
    x: f64,
    y: f64,
    #[serde(default)]
    tolerance: f64,
}

async fn hit(State(s): State<AppState>, Path(fid): Path<String>, Query(q): Query<HitQuery>) -> ApiResult<Json<Vec<Hit>>> {
    let (p, index) = s.frame(&fid)?;
    Ok(Json(hit_test(&p.frame(index)?, q.x, q.y, q.tolerance)))
}

/// Messages for a locale; `auto` picks one from `Accept-Language` and the
/// environment.
async fn i18n(State(s): State<AppState>, Path(locale): Path<String>, headers: HeaderMap) -> Json<Value> {
    let accept = headers.get(header::ACCEPT_LANGUAGE).and_then(|v| v.to_str().ok());
    let requested = (locale != "auto").then_some(locale.as_str());
    let resolved = resolve_locale(requested, accept, env_locale().as_deref(), s.catalog());
    Json(json!({
        "locale": resolved,
        "messages": s.catalog().messages(&resolved),
    }))
}
