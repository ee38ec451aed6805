//! End-to-end orchestration: ingest, process, finalize, analyze.

mod config;
pub mod server;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affect::{
    read_series_csv, read_summary_csv, video_summary, write_series_csv, write_summary_csv, Classifier,
    EmotionScores, EmotionSeries, SummaryRow,
};
use crate::corpus::{fetch_media, BinaryGroup, join_labels, load_labels, load_manifest, LabeledVideo, Registry};
use crate::detector::{crop_and_align, Detector, FaceDetection};
use crate::error::{Error, Result};
use crate::identity::{
    apply_verification, export_review_bundle, group_tracks, match_track, read_verification, resolve_target,
    CandidateTrack, FrameFaces, ResolutionStatus, ReviewBundle, TargetResolution, VerificationAction,
    VerificationRecord,
};
use crate::io::{read_json, write_json_atomic};
use crate::sampler::{stream_frames, SamplingStrategy, SkipRecord, VideoInfo};
use crate::stats::{analyze as analyze_rows, AnalysisReport};
use crate::viz::{render_figures, FigureOutcome};

pub use config::{FetcherConfig, PipelineConfig};

/// File layout under the output directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Workspace {
        Workspace { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus.json")
    }

    pub fn registry(&self) -> PathBuf {
        self.root.join("registry.json")
    }

    pub fn media_dir(&self) -> PathBuf {
        self.root.join("media")
    }

    pub fn strategy_dir(&self, s: SamplingStrategy) -> PathBuf {
        self.root.join(s.to_string())
    }

    pub fn faces(&self, s: SamplingStrategy, video_id: &str) -> PathBuf {
        self.strategy_dir(s).join("faces").join(format!("{video_id}.json"))
    }

    pub fn series(&self, s: SamplingStrategy, video_id: &str) -> PathBuf {
        self.strategy_dir(s).join("series").join(format!("{video_id}.csv"))
    }

    pub fn summary(&self, s: SamplingStrategy) -> PathBuf {
        self.strategy_dir(s).join("summary.csv")
    }

    pub fn run_report(&self, s: SamplingStrategy) -> PathBuf {
        self.strategy_dir(s).join("run_report.json")
    }

    pub fn review_root(&self, s: SamplingStrategy) -> PathBuf {
        self.strategy_dir(s).join("review")
    }

    pub fn analysis_dir(&self, s: SamplingStrategy) -> PathBuf {
        self.strategy_dir(s).join("analysis")
    }

    pub fn figures_dir(&self, s: SamplingStrategy) -> PathBuf {
        self.strategy_dir(s).join("figures")
    }
}

/// Ids become file names, so only a conservative character set is allowed.
pub fn check_video_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("video id `{id}` is not usable as a file name")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub videos: usize,
    pub pluralist: usize,
    pub populist: usize,
    pub media_ready: usize,
    pub media_failed: Vec<(String, String)>,
}

/// Joins manifest and labels into `corpus.json` and fetches missing media.
pub fn ingest(cfg: &PipelineConfig) -> Result<IngestReport> {
    let ws = Workspace::new(&cfg.out_dir);
    let mut manifest = load_manifest(&cfg.manifest)?;
    let base = cfg.manifest.parent().unwrap_or(Path::new("."));
    for e in &mut manifest {
        check_video_id(&e.video_id)?;
        if let Some(p) = e.local_path.as_mut().filter(|p| p.is_relative()) {
            *p = base.join(&*p);
        }
    }
    let labels = load_labels(&cfg.labels)?;
    let corpus = join_labels(&manifest, &labels)?;
    write_json_atomic(&ws.corpus(), &corpus)?;
    let registry = Registry::open(&ws.registry())?;
    let fetcher = cfg.fetcher();
    let mut report = IngestReport {
        videos: corpus.len(),
        pluralist: corpus.iter().filter(|v| v.binary_group == BinaryGroup::Pluralist).count(),
        populist: corpus.iter().filter(|v| v.binary_group == BinaryGroup::Populist).count(),
        media_ready: 0,
        media_failed: Vec::new(),
    };
    for v in &corpus {
        match fetch_media(&v.entry, fetcher.as_ref(), &registry, &ws.media_dir()) {
            Ok(_) => report.media_ready += 1,
            Err(e) => report.media_failed.push((v.entry.video_id.clone(), e.to_string())),
        }
    }
    Ok(report)
}

pub fn load_corpus(ws: &Workspace) -> Result<Vec<LabeledVideo>> {
    let path = ws.corpus();
    if !path.exists() {
        return Err(Error::Config(format!(
            "{} not found; run `ingest` first",
            path.display()
        )));
    }
    read_json(&path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceRecord {
    pub detection: FaceDetection,
    pub scores: EmotionScores,
    pub renormalized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub faces: Vec<FaceRecord>,
}

/// Everything measured for one video under one strategy; cached so that
/// re-runs and late verifications need no decoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoFaces {
    pub video_id: String,
    pub strategy: SamplingStrategy,
    pub info: VideoInfo,
    pub requested_frames: usize,
    pub skipped: Vec<SkipRecord>,
    pub frames: Vec<FrameRecord>,
    pub tracks: Vec<CandidateTrack>,
    pub resolution: TargetResolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VideoStatus {
    Processed,
    Failed,
    ReviewPending,
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoOutcome {
    pub video_id: String,
    pub status: VideoStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<TargetResolution>,
    pub frames_analyzed: usize,
    pub frames_skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub strategy: SamplingStrategy,
    pub manifest_size: usize,
    pub processed: usize,
    pub failed: usize,
    pub review_pending: usize,
    pub discarded: usize,
    /// Videos decoded and scored in this run (cached ones excluded).
    pub recomputed: usize,
    pub videos: Vec<VideoOutcome>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            1
        } else {
            0
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{}: {} videos: {} processed, {} review pending, {} discarded, {} failed ({} recomputed)",
            self.strategy,
            self.manifest_size,
            self.processed,
            self.review_pending,
            self.discarded,
            self.failed,
            self.recomputed
        )
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ProcessOptions {
    pub force: bool,
    pub jobs: Option<usize>,
}

struct Engines {
    detector: Detector,
    classifier: Classifier,
}

fn measure_video(
    cfg: &PipelineConfig,
    ws: &Workspace,
    engines: &Engines,
    video: &LabeledVideo,
    media: &Path,
) -> Result<VideoFaces> {
    let id = &video.entry.video_id;
    let provider = cfg.provider_for(media);
    let info = provider.probe(media)?;
    let indices = cfg.strategy.indices(info.total_frames);
    let mut frames = Vec::new();
    let mut crops: HashMap<(u64, usize), RgbImage> = HashMap::new();
    let skipped = stream_frames(id, media, &info, &indices, provider.as_ref(), &mut |sample| {
        let dets = engines.detector.detect(&sample.image)?;
        let mut inputs = Vec::with_capacity(dets.len());
        for (i, d) in dets.iter().enumerate() {
            let crop = crop_and_align(&sample.image, d)?;
            crops.insert((sample.frame_index, i), crop.display_crop);
            inputs.push(crop.model_input);
        }
        let refs: Vec<&[f32]> = inputs.iter().map(Vec::as_slice).collect();
        let scored = engines.classifier.classify_batch(&refs)?;
        frames.push(FrameRecord {
            frame_index: sample.frame_index,
            timestamp_s: sample.timestamp_s,
            faces: dets
                .into_iter()
                .zip(scored)
                .map(|(detection, c)| FaceRecord {
                    detection,
                    scores: c.scores,
                    renormalized: c.renormalized,
                })
                .collect(),
        });
        Ok(())
    })?;
    let faces: Vec<FrameFaces> = frames
        .iter()
        .map(|f| FrameFaces {
            frame_index: f.frame_index,
            detections: f.faces.iter().map(|r| r.detection.clone()).collect(),
        })
        .collect();
    let tracks = group_tracks(&faces, &cfg.tracking);
    let resolution = resolve_target(id, &tracks, &cfg.policy());
    if resolution.status == ResolutionStatus::NeedsReview && !tracks.is_empty() {
        let meta = ReviewBundle {
            video_id: id.clone(),
            leader: video.entry.leader_name.clone(),
            party: video.entry.party_name.clone(),
            country_iso: video.entry.country_iso.clone(),
            tracks: Vec::new(),
        };
        let lookup = |m: &crate::identity::TrackMember| {
            crops
                .get(&(m.frame_index, m.detection_index))
                .cloned()
                .ok_or_else(|| Error::Crop(format!("no crop for frame {}", m.frame_index)))
        };
        export_review_bundle(&ws.review_root(cfg.strategy), &meta, &tracks, &lookup)?;
    }
    Ok(VideoFaces {
        video_id: id.clone(),
        strategy: cfg.strategy,
        info,
        requested_frames: indices.len(),
        skipped,
        frames,
        tracks,
        resolution,
    })
}

/// Decodes, detects and scores every ingested video, then finalizes.
pub fn process(cfg: &PipelineConfig, opts: ProcessOptions) -> Result<RunReport> {
    cfg.validate()?;
    let ws = Workspace::new(&cfg.out_dir);
    let corpus = load_corpus(&ws)?;
    let engines = Engines {
        detector: Detector::load(&cfg.models, cfg.detector_config())?,
        classifier: Classifier::load(&cfg.models.emotion)?,
    };
    let registry = Registry::open(&ws.registry())?;
    let fetcher = cfg.fetcher();
    let jobs = opts.jobs.unwrap_or_else(|| cfg.jobs());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<(String, Result<bool>)> = pool.install(|| {
        corpus
            .par_iter()
            .map(|v| {
                let id = v.entry.video_id.clone();
                let cache = ws.faces(cfg.strategy, &id);
                let run = || -> Result<bool> {
                    if cache.exists() && !opts.force {
                        return Ok(false);
                    }
                    let media = fetch_media(&v.entry, fetcher.as_ref(), &registry, &ws.media_dir())?;
                    let faces = measure_video(cfg, &ws, &engines, v, &media)?;
                    write_json_atomic(&cache, &faces)?;
                    Ok(true)
                };
                let r = run();
                if let Err(e) = &r {
                    log::warn!("{id}: {e}");
                }
                (id, r)
            })
            .collect()
    });
    let mut recomputed = 0;
    let mut failures = HashMap::new();
    for (id, r) in results {
        match r {
            Ok(true) => recomputed += 1,
            Ok(false) => {}
            Err(e) => {
                if let Error::Config(_) | Error::Model(_) = e {
                    return Err(e);
                }
                failures.insert(id, e.to_string());
            }
        }
    }
    let mut report = finalize(cfg, cfg.strategy, &corpus, &failures)?;
    report.recomputed = recomputed;
    write_json_atomic(&ws.run_report(cfg.strategy), &report)?;
    Ok(report)
}

fn outcome(id: &str, status: VideoStatus, detail: Option<String>) -> VideoOutcome {
    VideoOutcome {
        video_id: id.to_string(),
        status,
        resolution: None,
        frames_analyzed: 0,
        frames_skipped: 0,
        detail,
    }
}

/// Applies stored verifications to cached measurements, writes series for
/// every selected video and rewrites the summary table. Videos with
/// neither a cache nor a recorded failure count as failed.
pub fn finalize(
    cfg: &PipelineConfig,
    strategy: SamplingStrategy,
    corpus: &[LabeledVideo],
    failures: &HashMap<String, String>,
) -> Result<RunReport> {
    let ws = Workspace::new(&cfg.out_dir);
    let others = if cfg.carry_over_verifications {
        sibling_strategies(&ws, strategy)
    } else {
        Vec::new()
    };
    let mut rows = Vec::new();
    let mut videos = Vec::new();
    for v in corpus {
        let id = &v.entry.video_id;
        if let Some(reason) = failures.get(id) {
            videos.push(outcome(id, VideoStatus::Failed, Some(reason.clone())));
            continue;
        }
        let cache = ws.faces(strategy, id);
        if !cache.exists() {
            videos.push(outcome(id, VideoStatus::Failed, Some("not processed".into())));
            continue;
        }
        match finalize_video(cfg, strategy, &others, v, &cache) {
            Ok((out, row)) => {
                rows.extend(row);
                videos.push(out);
            }
            Err(e) => videos.push(outcome(id, VideoStatus::Failed, Some(e.to_string()))),
        }
    }
    write_summary_csv(&ws.summary(strategy), &rows)?;
    let count = |s: VideoStatus| videos.iter().filter(|o| o.status == s).count();
    Ok(RunReport {
        strategy,
        manifest_size: corpus.len(),
        processed: count(VideoStatus::Processed),
        failed: count(VideoStatus::Failed),
        review_pending: count(VideoStatus::ReviewPending),
        discarded: count(VideoStatus::Discarded),
        recomputed: 0,
        videos,
    })
}

/// Other strategies with results in the same output directory.
fn sibling_strategies(ws: &Workspace, strategy: SamplingStrategy) -> Vec<SamplingStrategy> {
    let Ok(entries) = std::fs::read_dir(ws.root()) else {
        return Vec::new();
    };
    let mut out: Vec<SamplingStrategy> = entries
        .filter_map(|e| e.ok()?.file_name().to_str()?.parse().ok())
        .filter(|s| *s != strategy)
        .collect();
    out.sort_by_key(|s| s.to_string());
    out
}

/// A verification recorded under another strategy, re-expressed in terms of
/// this strategy's tracks. A selection whose track cannot be located again
/// is not carried.
fn carried_verification(
    ws: &Workspace,
    others: &[SamplingStrategy],
    faces: &VideoFaces,
    tracking: &crate::identity::TrackingConfig,
) -> Result<Option<VerificationRecord>> {
    for &other in others {
        let Some(record) = read_verification(&ws.review_root(other), &faces.video_id)? else {
            continue;
        };
        let track_id = match (record.action, record.track_id) {
            (VerificationAction::Discard, _) => None,
            (VerificationAction::Select, Some(t)) => {
                let cache = ws.faces(other, &faces.video_id);
                if !cache.exists() {
                    continue;
                }
                let theirs: VideoFaces = read_json(&cache)?;
                let Some(reference) = theirs.tracks.iter().find(|x| x.track_id == t) else {
                    continue;
                };
                match match_track(reference, &faces.tracks, tracking) {
                    Some(mine) => Some(mine),
                    None => continue,
                }
            }
            (VerificationAction::Select, None) => continue,
        };
        return Ok(Some(VerificationRecord { track_id, ..record }));
    }
    Ok(None)
}

fn finalize_video(
    cfg: &PipelineConfig,
    strategy: SamplingStrategy,
    others: &[SamplingStrategy],
    video: &LabeledVideo,
    cache: &Path,
) -> Result<(VideoOutcome, Option<SummaryRow>)> {
    let ws = Workspace::new(&cfg.out_dir);
    let faces: VideoFaces = read_json(cache)?;
    let id = &video.entry.video_id;
    let series_path = ws.series(strategy, id);
    let mut out = VideoOutcome {
        video_id: id.clone(),
        status: VideoStatus::Failed,
        resolution: None,
        frames_analyzed: 0,
        frames_skipped: faces.skipped.len(),
        detail: None,
    };
    if faces.tracks.is_empty() {
        out.detail = Some("no faces detected".into());
        return Ok((out, None));
    }
    let ids: Vec<u32> = faces.tracks.iter().map(|t| t.track_id).collect();
    let mut record = None;
    if faces.resolution.status == ResolutionStatus::NeedsReview {
        record = read_verification(&ws.review_root(strategy), id)?;
        if record.is_none() {
            record = carried_verification(&ws, others, &faces, &cfg.tracking)?;
        }
    }
    let resolution = match record {
        Some(record) => apply_verification(&faces.resolution, &ids, &record)?,
        None => faces.resolution.clone(),
    };
    out.resolution = Some(resolution.clone());
    let Some(track_id) = resolution.selected_track.filter(|_| resolution.status.is_selected()) else {
        if series_path.exists() {
            std::fs::remove_file(&series_path).map_err(|e| Error::io(&series_path, e))?;
        }
        out.status = match resolution.status {
            ResolutionStatus::Discarded => VideoStatus::Discarded,
            _ => VideoStatus::ReviewPending,
        };
        return Ok((out, None));
    };
    let track = faces
        .tracks
        .iter()
        .find(|t| t.track_id == track_id)
        .ok_or_else(|| Error::Manifest(format!("track {track_id} missing from cache")))?;
    let by_frame: HashMap<u64, &FrameRecord> = faces.frames.iter().map(|f| (f.frame_index, f)).collect();
    let mut series = EmotionSeries::new(id.clone());
    for m in &track.members {
        let frame = by_frame[&m.frame_index];
        let face = frame
            .faces
            .get(m.detection_index)
            .ok_or_else(|| Error::InvalidParameter(format!("stale face index in {}", cache.display())))?;
        series.push(m.frame_index, frame.timestamp_s, face.scores)?;
    }
    write_series_csv(&series_path, &series)?;
    let stored = read_series_csv(&series_path, id)?;
    let summary = video_summary(&stored)?;
    out.status = VideoStatus::Processed;
    out.frames_analyzed = stored.len();
    Ok((out, Some(SummaryRow::new(video, summary))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisOutcome {
    pub strategy: String,
    pub report: AnalysisReport,
    pub report_json: PathBuf,
    pub report_text: PathBuf,
    pub figures: FigureOutcome,
}

/// Summary rows for a strategy, after folding in any new verifications.
pub fn current_summary(cfg: &PipelineConfig, strategy: SamplingStrategy) -> Result<Vec<SummaryRow>> {
    let ws = Workspace::new(&cfg.out_dir);
    if ws.corpus().exists() && ws.strategy_dir(strategy).join("faces").exists() {
        let corpus = load_corpus(&ws)?;
        let report = finalize(cfg, strategy, &corpus, &HashMap::new())?;
        write_json_atomic(&ws.run_report(strategy), &report)?;
    }
    let path = ws.summary(strategy);
    if !path.exists() {
        return Err(Error::Config(format!("summary table {} not found", path.display())));
    }
    read_summary_csv(&path)
}

/// Statistics and figures for one summary table.
pub fn analyze_summary(
    rows: &[SummaryRow],
    cfg: &PipelineConfig,
    label: &str,
    out_dir: &Path,
) -> Result<AnalysisOutcome> {
    let report = analyze_rows(rows, cfg.t_test, label)?;
    let report_json = out_dir.join("analysis").join("report.json");
    let report_text = out_dir.join("analysis").join("report.txt");
    write_json_atomic(&report_json, &report)?;
    crate::io::write_atomic(&report_text, report.to_text().as_bytes())?;
    let figures = render_figures(rows, label, &out_dir.join("figures"), cfg.seed)?;
    Ok(AnalysisOutcome {
        strategy: label.to_string(),
        report,
        report_json,
        report_text,
        figures,
    })
}

pub fn analyze(cfg: &PipelineConfig, strategy: SamplingStrategy) -> Result<AnalysisOutcome> {
    let rows = current_summary(cfg, strategy)?;
    let ws = Workspace::new(&cfg.out_dir);
    analyze_summary(&rows, cfg, &strategy.to_string(), &ws.strategy_dir(strategy))
}

pub fn figures(cfg: &PipelineConfig, strategy: SamplingStrategy) -> Result<FigureOutcome> {
    let rows = current_summary(cfg, strategy)?;
    let ws = Workspace::new(&cfg.out_dir);
    render_figures(&rows, &strategy.to_string(), &ws.figures_dir(strategy), cfg.seed)
}
