//! Which face in a video belongs to the target speaker.

mod review;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::detector::FaceDetection;
use crate::error::{Error, Result};

pub use review::{
    bundle_dir, export_review_bundle, read_bundle, read_verification, verification_path,
    write_verification, BundleTrack, CropSource, ReviewBundle, VerificationAction,
    VerificationRecord, BUNDLE_FILE, MAX_CROPS, VERIFICATION_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackingConfig {
    /// Largest center displacement, in units of the mean box side.
    pub max_center_distance: f64,
    /// Largest ratio between box sides.
    pub max_scale_ratio: f64,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        TrackingConfig {
            max_center_distance: 0.5,
            max_scale_ratio: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResolutionPolicy {
    pub auto_coverage: f64,
}

impl Default for ResolutionPolicy {
    fn default() -> Self {
        ResolutionPolicy { auto_coverage: 0.90 }
    }
}

/// Detections of one sampled frame. Frames without faces still count
/// toward coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFaces {
    pub frame_index: u64,
    pub detections: Vec<FaceDetection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackMember {
    pub frame_index: u64,
    /// Position of the detection within its frame's list.
    pub detection_index: usize,
    pub detection: FaceDetection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTrack {
    pub track_id: u32,
    pub members: Vec<TrackMember>,
    pub coverage: f64,
}

impl CandidateTrack {
    pub fn median_area(&self) -> f64 {
        if self.members.is_empty() {
            return 0.0;
        }
        median(self.members.iter().map(|m| m.detection.bbox.area()).collect())
    }
}

fn side(d: &FaceDetection) -> f64 {
    d.bbox.area().sqrt()
}

/// Greedy geometric association: each detection joins the closest track
/// whose latest box is near enough in position and scale, otherwise starts
/// a new track. Track ids count from 1 in order of first appearance.
pub fn group_tracks(frames: &[FrameFaces], cfg: &TrackingConfig) -> Vec<CandidateTrack> {
    let mut tracks: Vec<CandidateTrack> = Vec::new();
    for frame in frames {
        let mut pairs = Vec::new();
        for (di, d) in frame.detections.iter().enumerate() {
            for (ti, t) in tracks.iter().enumerate() {
                let last = &t.members.last().expect("non-empty track").detection;
                let (s1, s2) = (side(d), side(last));
                if s1.max(s2) > cfg.max_scale_ratio * s1.min(s2) {
                    continue;
                }
                let (c1, c2) = (d.bbox.center(), last.bbox.center());
                let dist = (c1.0 - c2.0).hypot(c1.1 - c2.1) / ((s1 + s2) / 2.0);
                if dist <= cfg.max_center_distance {
                    pairs.push((dist, di, ti));
                }
            }
        }
        pairs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        let mut det_used = vec![false; frame.detections.len()];
        let mut track_used = vec![false; tracks.len()];
        let mut assigned: Vec<Option<usize>> = vec![None; frame.detections.len()];
        for (_, di, ti) in pairs {
            if !det_used[di] && !track_used[ti] {
                det_used[di] = true;
                track_used[ti] = true;
                assigned[di] = Some(ti);
            }
        }
        for (di, d) in frame.detections.iter().enumerate() {
            let member = TrackMember {
                frame_index: frame.frame_index,
                detection_index: di,
                detection: d.clone(),
            };
            match assigned[di] {
                Some(ti) => tracks[ti].members.push(member),
                None => tracks.push(CandidateTrack {
                    track_id: tracks.len() as u32 + 1,
                    members: vec![member],
                    coverage: 0.0,
                }),
            }
        }
    }
    let total = frames.len().max(1) as f64;
    for t in &mut tracks {
        let mut seen: Vec<u64> = t.members.iter().map(|m| m.frame_index).collect();
        seen.dedup();
        t.coverage = seen.len() as f64 / total;
    }
    tracks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionStatus {
    AutoConfirmed,
    NeedsReview,
    Confirmed,
    Discarded,
}

impl ResolutionStatus {
    pub fn is_selected(self) -> bool {
        matches!(self, ResolutionStatus::AutoConfirmed | ResolutionStatus::Confirmed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionMethod {
    SingleFace,
    LargestFace,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResolution {
    pub video_id: String,
    pub status: ResolutionStatus,
    pub selected_track: Option<u32>,
    pub method: Option<ResolutionMethod>,
}

/// Auto-confirms when exactly one track reaches `auto_coverage` and no
/// other track has a larger median face; everything else goes to review.
pub fn resolve_target(video_id: &str, tracks: &[CandidateTrack], policy: &ResolutionPolicy) -> TargetResolution {
    let review = TargetResolution {
        video_id: video_id.to_string(),
        status: ResolutionStatus::NeedsReview,
        selected_track: None,
        method: None,
    };
    let qualifying: Vec<&CandidateTrack> = tracks
        .iter()
        .filter(|t| t.coverage >= policy.auto_coverage)
        .collect();
    let [winner] = qualifying.as_slice() else {
        return review;
    };
    let area = winner.median_area();
    if tracks
        .iter()
        .any(|t| t.track_id != winner.track_id && t.median_area() >= area)
    {
        return review;
    }
    TargetResolution {
        video_id: video_id.to_string(),
        status: ResolutionStatus::AutoConfirmed,
        selected_track: Some(winner.track_id),
        method: Some(if tracks.len() == 1 {
            ResolutionMethod::SingleFace
        } else {
            ResolutionMethod::LargestFace
        }),
    }
}

/// Applies a reviewer decision. The track must be one of `track_ids`.
pub fn apply_verification(
    resolution: &TargetResolution,
    track_ids: &[u32],
    manifest: &VerificationRecord,
) -> Result<TargetResolution> {
    if manifest.video_id != resolution.video_id {
        return Err(Error::Manifest(format!(
            "manifest is for `{}`, not `{}`",
            manifest.video_id, resolution.video_id
        )));
    }
    let (status, selected) = match manifest.action {
        VerificationAction::Discard => (ResolutionStatus::Discarded, None),
        VerificationAction::Select => {
            let id = manifest
                .track_id
                .ok_or_else(|| Error::Manifest("select without track_id".into()))?;
            if !track_ids.contains(&id) {
                return Err(Error::Manifest(format!(
                    "track {id} does not exist for `{}`",
                    resolution.video_id
                )));
            }
            (ResolutionStatus::Confirmed, Some(id))
        }
    };
    Ok(TargetResolution {
        video_id: resolution.video_id.clone(),
        status,
        selected_track: selected,
        method: Some(ResolutionMethod::Manual),
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Median center and side of a track's boxes.
fn footprint(t: &CandidateTrack) -> Option<(f64, f64, f64)> {
    if t.members.is_empty() {
        return None;
    }
    let centers: Vec<(f64, f64)> = t.members.iter().map(|m| m.detection.bbox.center()).collect();
    Some((
        median(centers.iter().map(|c| c.0).collect()),
        median(centers.iter().map(|c| c.1).collect()),
        median(t.members.iter().map(|m| m.detection.bbox.area().sqrt()).collect()),
    ))
}

/// The track in `candidates` occupying the same place in the frame as
/// `reference` (typically the same video sampled differently), judged by
/// median box position and size under the tracking tolerances.
pub fn match_track(reference: &CandidateTrack, candidates: &[CandidateTrack], cfg: &TrackingConfig) -> Option<u32> {
    let (rx, ry, rs) = footprint(reference)?;
    candidates
        .iter()
        .filter_map(|c| {
            let (x, y, s) = footprint(c)?;
            let ratio = s.max(rs) / s.min(rs).max(f64::MIN_POSITIVE);
            let dist = (x - rx).hypot(y - ry) / ((s + rs) / 2.0);
            (ratio <= cfg.max_scale_ratio && dist <= cfg.max_center_distance).then_some((dist, c.track_id))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, id)| id)
}
