//! Local HTTP service backing the manual verification step.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use super::check_video_id;
use crate::error::{Error, Result};
use crate::identity::{
    bundle_dir, read_bundle, read_verification, write_verification, ResolutionStatus, ReviewBundle,
    VerificationAction, VerificationRecord, BUNDLE_FILE,
};

struct Shared {
    root: PathBuf,
    // one writer at a time for verification files
    write: Mutex<()>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackView {
    pub track_id: u32,
    pub coverage: f64,
    pub members: usize,
    pub median_area: f64,
    pub crops: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub video_id: String,
    pub leader: String,
    pub party: String,
    pub country_iso: String,
    pub status: ResolutionStatus,
    pub track_count: usize,
    pub tracks: Vec<TrackView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationRecord>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct VerifyRequest {
    pub action: VerificationAction,
    #[serde(default)]
    pub track_id: Option<u32>,
    #[serde(default)]
    pub annotator: Option<String>,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

fn not_found(what: String) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, what)
}

fn item(root: &std::path::Path, bundle: ReviewBundle) -> Result<ReviewItem> {
    let verification = read_verification(root, &bundle.video_id)?;
    let id = bundle.video_id.clone();
    Ok(ReviewItem {
        status: bundle.status_of(verification.as_ref()),
        track_count: bundle.tracks.len(),
        tracks: bundle
            .tracks
            .into_iter()
            .map(|t| TrackView {
                track_id: t.track_id,
                coverage: t.coverage,
                members: t.members,
                median_area: t.median_area,
                crops: t.crops.iter().map(|c| format!("/api/videos/{id}/crops/{c}")).collect(),
            })
            .collect(),
        video_id: bundle.video_id,
        leader: bundle.leader,
        party: bundle.party,
        country_iso: bundle.country_iso,
        verification,
    })
}

fn load(root: &std::path::Path, id: &str) -> ApiResult<ReviewBundle> {
    if check_video_id(id).is_err() || !bundle_dir(root, id).join(BUNDLE_FILE).exists() {
        return Err(not_found(format!("no review bundle for `{id}`")));
    }
    Ok(read_bundle(root, id)?)
}

/// All bundles still awaiting a decision, ordered by video id.
pub fn pending_items(root: &std::path::Path) -> Result<Vec<ReviewItem>> {
    let mut ids = Vec::new();
    if root.exists() {
        for entry in std::fs::read_dir(root).map_err(|e| Error::io(root, e))? {
            let entry = entry.map_err(|e| Error::io(root, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if entry.path().join(BUNDLE_FILE).exists() && check_video_id(&name).is_ok() {
                ids.push(name);
            }
        }
    }
    ids.sort();
    let mut out = Vec::new();
    for id in ids {
        let it = item(root, read_bundle(root, &id)?)?;
        if it.status == ResolutionStatus::NeedsReview {
            out.push(it);
        }
    }
    Ok(out)
}

async fn list(State(s): State<Arc<Shared>>) -> ApiResult<Json<Vec<ReviewItem>>> {
    Ok(Json(pending_items(&s.root)?))
}

async fn detail(State(s): State<Arc<Shared>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<ReviewItem>> {
    let bundle = load(&s.root, &id)?;
    Ok(Json(item(&s.root, bundle)?))
}

async fn crop(State(s): State<Arc<Shared>>, UrlPath((id, file)): UrlPath<(String, String)>) -> ApiResult<Response> {
    let bundle = load(&s.root, &id)?;
    // only names the bundle lists, so no path ever leaves the bundle directory
    if !bundle.tracks.iter().any(|t| t.crops.contains(&file)) {
        return Err(not_found(format!("no crop `{file}` for `{id}`")));
    }
    let path = bundle_dir(&s.root, &id).join(&file);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

async fn verify(
    State(s): State<Arc<Shared>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<VerifyRequest>,
) -> ApiResult<Json<VerificationRecord>> {
    let bundle = load(&s.root, &id)?;
    let track_id = match req.action {
        VerificationAction::Select => {
            let Some(t) = req.track_id else {
                return Err(ApiError(StatusCode::UNPROCESSABLE_ENTITY, "select requires track_id".into()));
            };
            if !bundle.tracks.iter().any(|b| b.track_id == t) {
                return Err(ApiError(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    format!("video `{id}` has no track {t}"),
                ));
            }
            Some(t)
        }
        VerificationAction::Discard => None,
    };
    let _guard = s.write.lock().await;
    if let Some(existing) = read_verification(&s.root, &id)? {
        if existing.action == req.action && existing.track_id == track_id {
            return Ok(Json(existing));
        }
        return Err(ApiError(
            StatusCode::CONFLICT,
            format!("video `{id}` already has a different verification"),
        ));
    }
    let record = VerificationRecord {
        video_id: id,
        action: req.action,
        track_id,
        annotator: req.annotator.unwrap_or_default(),
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    write_verification(&s.root, &record)?;
    Ok(Json(record))
}

/// Routes over the review bundles under `review_root`.
pub fn router(review_root: PathBuf) -> Router {
    let shared = Arc::new(Shared {
        root: review_root,
        write: Mutex::new(()),
    });
    Router::new()
        .route("/api/videos", get(list))
        .route("/api/videos/{id}", get(detail))
        .route("/api/videos/{id}/crops/{file}", get(crop))
        .route("/api/videos/{id}/verify", post(verify))
        .with_state(shared)
}

/// Binds on loopback; a taken port is a configuration error.
pub async fn bind(port: u16) -> Result<tokio::net::TcpListener> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Config(format!("cannot listen on {addr}: {e}")))
}

pub async fn serve(listener: tokio::net::TcpListener, review_root: PathBuf) -> Result<()> {
    axum::serve(listener, router(review_root))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::Config(format!("review server: {e}")))
}
