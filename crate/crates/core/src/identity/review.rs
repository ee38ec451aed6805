use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};

use super::{CandidateTrack, ResolutionStatus, TrackMember};
use crate::error::{Error, Result};
use crate::io::{read_json, write_atomic, write_json_atomic};
use crate::sampler::uniform_indices;

pub const MAX_CROPS: usize = 9;
pub const BUNDLE_FILE: &str = "bundle.json";
pub const VERIFICATION_FILE: &str = "verification.json";

/// Supplies the display crop of a track member.
pub type CropSource<'a> = &'a dyn Fn(&TrackMember) -> Result<RgbImage>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleTrack {
    pub track_id: u32,
    pub coverage: f64,
    pub members: usize,
    pub median_area: f64,
    pub crops: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReviewBundle {
    pub video_id: String,
    pub leader: String,
    pub party: String,
    pub country_iso: String,
    pub tracks: Vec<BundleTrack>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerificationAction {
    Select,
    Discard,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub video_id: String,
    pub action: VerificationAction,
    #[serde(default)]
    pub track_id: Option<u32>,
    #[serde(default)]
    pub annotator: String,
    #[serde(default)]
    pub timestamp: String,
}

pub fn bundle_dir(review_root: &Path, video_id: &str) -> PathBuf {
    review_root.join(video_id)
}

pub fn verification_path(review_root: &Path, video_id: &str) -> PathBuf {
    bundle_dir(review_root, video_id).join(VERIFICATION_FILE)
}

fn png_bytes(img: &RgbImage, path: &Path) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png).map_err(|e| Error::Media {
        path: path.to_path_buf(),
        reason: format!("png encoding failed: {e}"),
    })?;
    Ok(buf.into_inner())
}

/// Writes `bundle.json` and up to nine evenly spaced crops per track into
/// `<review_root>/<video_id>/`. Returns the bundle directory.
pub fn export_review_bundle(
    review_root: &Path,
    meta: &ReviewBundle,
    tracks: &[CandidateTrack],
    crops: CropSource<'_>,
) -> Result<PathBuf> {
    if tracks.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "video `{}` has no face tracks to review",
            meta.video_id
        )));
    }
    let dir = bundle_dir(review_root, &meta.video_id);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for entry in std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let path = entry.map_err(|e| Error::io(&dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("track_") && name.ends_with(".png") {
            std::fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
    }
    let mut bundle = ReviewBundle {
        tracks: Vec::new(),
        ..meta.clone()
    };
    for t in tracks {
        let picks = uniform_indices(t.members.len() as u64, MAX_CROPS as u64);
        let mut files = Vec::new();
        for (n, &i) in picks.iter().enumerate() {
            let name = format!("track_{}_{}.png", t.track_id, n + 1);
            let path = dir.join(&name);
            let img = crops(&t.members[i as usize])?;
            write_atomic(&path, &png_bytes(&img, &path)?)?;
            files.push(name);
        }
        bundle.tracks.push(BundleTrack {
            track_id: t.track_id,
            coverage: t.coverage,
            members: t.members.len(),
            median_area: t.median_area(),
            crops: files,
        });
    }
    write_json_atomic(&dir.join(BUNDLE_FILE), &bundle)?;
    Ok(dir)
}

pub fn read_bundle(review_root: &Path, video_id: &str) -> Result<ReviewBundle> {
    read_json(&bundle_dir(review_root, video_id).join(BUNDLE_FILE))
}

pub fn write_verification(review_root: &Path, record: &VerificationRecord) -> Result<PathBuf> {
    let path = verification_path(review_root, &record.video_id);
    write_json_atomic(&path, record)?;
    Ok(path)
}

/// The stored decision, if any.
pub fn read_verification(review_root: &Path, video_id: &str) -> Result<Option<VerificationRecord>> {
    let path = verification_path(review_root, video_id);
    if !path.exists() {
        return Ok(None);
    }
    let record: VerificationRecord = read_json(&path)?;
    if record.video_id != video_id {
        return Err(Error::Manifest(format!(
            "{} names video `{}`",
            path.display(),
            record.video_id
        )));
    }
    Ok(Some(record))
}

impl ReviewBundle {
    pub fn status_of(&self, verification: Option<&VerificationRecord>) -> ResolutionStatus {
        match verification.map(|v| v.action) {
            None => ResolutionStatus::NeedsReview,
            Some(VerificationAction::Select) => ResolutionStatus::Confirmed,
            Some(VerificationAction::Discard) => ResolutionStatus::Discarded,
        }
    }
}
