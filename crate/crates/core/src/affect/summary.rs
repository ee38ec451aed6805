use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scores::{dominant_label, negative_score, Emotion, EmotionScores};
use crate::corpus::{BinaryGroup, LabeledVideo, PopulismCategory};
use crate::error::{Error, Result};

pub const SERIES_COLUMNS: [&str; 9] = [
    "frame", "timestamp", "angry", "disgust", "fear", "happy", "sad", "surprise", "neutral",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesFrame {
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub scores: EmotionScores,
}

/// Time-ordered scores for one video.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmotionSeries {
    pub video_id: String,
    frames: Vec<SeriesFrame>,
}

impl EmotionSeries {
    pub fn new(video_id: impl Into<String>) -> Self {
        EmotionSeries {
            video_id: video_id.into(),
            frames: Vec::new(),
        }
    }

    /// Appends a frame; indices must be strictly increasing.
    pub fn push(&mut self, frame_index: u64, timestamp_s: f64, scores: EmotionScores) -> Result<()> {
        if let Some(last) = self.frames.last() {
            if frame_index <= last.frame_index {
                return Err(Error::InvalidParameter(format!(
                    "frame {frame_index} does not follow frame {} in series {}",
                    last.frame_index, self.video_id
                )));
            }
        }
        self.frames.push(SeriesFrame {
            frame_index,
            timestamp_s,
            scores,
        });
        Ok(())
    }

    pub fn frames(&self) -> &[SeriesFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoSummary {
    pub video_id: String,
    pub frame_count: usize,
    /// Per-emotion means in canonical order.
    pub means: [f64; 7],
    pub mean_negative: f64,
    /// Fraction of frames where each label is the argmax.
    pub dominance: [f64; 7],
    /// Fraction of frames whose negative mass is at least 0.5.
    pub negative_dominant_fraction: f64,
}

impl VideoSummary {
    pub fn mean(&self, e: Emotion) -> f64 {
        self.means[e.index()]
    }

    pub fn dominance(&self, e: Emotion) -> f64 {
        self.dominance[e.index()]
    }
}

pub fn video_summary(series: &EmotionSeries) -> Result<VideoSummary> {
    if series.is_empty() {
        return Err(Error::EmptyInput(format!(
            "series for {} has no frames",
            series.video_id
        )));
    }
    let n = series.len() as f64;
    let mut sums = [0.0; 7];
    let mut dom_counts = [0usize; 7];
    let mut neg_dominant = 0usize;
    for f in series.frames() {
        let v = f.scores.values();
        for (s, x) in sums.iter_mut().zip(v) {
            *s += x;
        }
        dom_counts[dominant_label(v).index()] += 1;
        if negative_score(v) >= 0.5 {
            neg_dominant += 1;
        }
    }
    let means = sums.map(|s| s / n);
    Ok(VideoSummary {
        video_id: series.video_id.clone(),
        frame_count: series.len(),
        means,
        mean_negative: negative_score(&means),
        dominance: dom_counts.map(|c| c as f64 / n),
        negative_dominant_fraction: neg_dominant as f64 / n,
    })
}

fn fixed6(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_series_csv(path: &Path, series: &EmotionSeries) -> Result<()> {
    let mut rows = vec![SERIES_COLUMNS.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    for f in series.frames() {
        let mut row = vec![f.frame_index.to_string(), fixed6(f.timestamp_s)];
        row.extend(f.scores.values().iter().map(|v| fixed6(*v)));
        rows.push(row);
    }
    crate::io::write_csv_atomic(path, &rows)
}

fn parse_f64(s: &str, file: &str, row: usize, column: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Row {
        file: file.to_string(),
        row,
        reason: format!("`{column}` value `{s}` is not a number"),
    })
}

fn check_header(headers: &csv::StringRecord, expected: &[String], file: &str) -> Result<()> {
    for (i, col) in expected.iter().enumerate() {
        if headers.get(i).map(str::trim) != Some(col.as_str()) {
            return Err(Error::Schema {
                file: file.to_string(),
                column: col.clone(),
            });
        }
    }
    Ok(())
}

pub fn read_series_csv(path: &Path, video_id: &str) -> Result<EmotionSeries> {
    let file = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let expected: Vec<String> = SERIES_COLUMNS.iter().map(|s| s.to_string()).collect();
    check_header(&headers, &expected, &file)?;
    let mut series = EmotionSeries::new(video_id);
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let frame = rec[0].trim().parse::<u64>().map_err(|_| Error::Row {
            file: file.clone(),
            row,
            reason: format!("frame `{}` is not an integer", &rec[0]),
        })?;
        let ts = parse_f64(&rec[1], &file, row, "timestamp")?;
        let mut v = [0.0; 7];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = parse_f64(&rec[k + 2], &file, row, SERIES_COLUMNS[k + 2])?;
        }
        let scores = EmotionScores::new(v).map_err(|e| Error::Row {
            file: file.clone(),
            row,
            reason: e.to_string(),
        })?;
        series.push(frame, ts, scores).map_err(|e| Error::Row {
            file: file.clone(),
            row,
            reason: e.to_string(),
        })?;
    }
    Ok(series)
}

/// A summary joined with the video's labels: one row of the summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub video_id: String,
    pub country_iso: String,
    pub party: String,
    pub leader: String,
    pub populism_category: PopulismCategory,
    pub summary: VideoSummary,
}

impl SummaryRow {
    pub fn new(video: &LabeledVideo, summary: VideoSummary) -> Self {
        SummaryRow {
            video_id: video.entry.video_id.clone(),
            country_iso: video.entry.country_iso.clone(),
            party: video.entry.party_name.clone(),
            leader: video.entry.leader_name.clone(),
            populism_category: video.populism_category,
            summary,
        }
    }

    pub fn binary_group(&self) -> BinaryGroup {
        self.populism_category.binary_group()
    }
}

pub fn summary_columns() -> Vec<String> {
    let mut cols: Vec<String> = ["video_id", "country_iso", "party", "leader", "populism_category", "frames"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(Emotion::ALL.iter().map(|e| format!("mean_{e}")));
    cols.push("mean_negative".into());
    cols.push("neg_dominant_frac".into());
    cols.extend(Emotion::ALL.iter().map(|e| format!("dom_{e}")));
    cols
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = vec![summary_columns()];
    for r in rows {
        let s = &r.summary;
        let mut row = vec![
            r.video_id.clone(),
            r.country_iso.clone(),
            r.party.clone(),
            r.leader.clone(),
            r.populism_category.to_string(),
            s.frame_count.to_string(),
        ];
        row.extend(s.means.iter().map(|v| fixed6(*v)));
        row.push(fixed6(s.mean_negative));
        row.push(fixed6(s.negative_dominant_fraction));
        row.extend(s.dominance.iter().map(|v| fixed6(*v)));
        out.push(row);
    }
    crate::io::write_csv_atomic(path, &out)
}

/// Reads a summary CSV. Columns are located by name, so extra columns and
/// reordering are tolerated.
pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let file = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let cols = summary_columns();
    let idx: Vec<usize> = cols
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h.trim() == c)
                .ok_or_else(|| Error::Schema {
                    file: file.clone(),
                    column: c.clone(),
                })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let cell = |k: usize| rec.get(idx[k]).unwrap_or("").trim();
        let num = |k: usize| parse_f64(cell(k), &file, row, &cols[k]);
        let category = cell(4)
            .parse::<f64>()
            .ok()
            .filter(|c| c.fract() == 0.0 && (1.0..=4.0).contains(c))
            .and_then(|c| PopulismCategory::new(c as u8).ok())
            .ok_or_else(|| Error::Row {
                file: file.clone(),
                row,
                reason: format!("populism_category `{}` is not one of 1..4", cell(4)),
            })?;
        let frame_count = num(5)?;
        let mut means = [0.0; 7];
        let mut dominance = [0.0; 7];
        for k in 0..7 {
            means[k] = num(6 + k)?;
            dominance[k] = num(15 + k)?;
        }
        rows.push(SummaryRow {
            video_id: cell(0).to_string(),
            country_iso: cell(1).to_string(),
            party: cell(2).to_string(),
            leader: cell(3).to_string(),
            populism_category: category,
            summary: VideoSummary {
                video_id: cell(0).to_string(),
                frame_count: frame_count as usize,
                means,
                mean_negative: num(13)?,
                dominance,
                negative_dominant_fraction: num(14)?,
            },
        });
    }
    Ok(rows)
}
