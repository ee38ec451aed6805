use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::provider::{FrameProvider, VideoInfo};
use crate::error::{Error, Result};

/// Decodes through external `ffprobe`/`ffmpeg` processes, reading raw RGB
/// frames from a pipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfmpegProvider {
    pub ffmpeg: PathBuf,
    pub ffprobe: PathBuf,
}

impl Default for FfmpegProvider {
    fn default() -> Self {
        FfmpegProvider {
            ffmpeg: "ffmpeg".into(),
            ffprobe: "ffprobe".into(),
        }
    }
}

#[derive(Deserialize)]
struct Probe {
    streams: Vec<ProbeStream>,
}

#[derive(Deserialize)]
struct ProbeStream {
    width: u32,
    height: u32,
    r_frame_rate: String,
    nb_read_frames: Option<String>,
    nb_frames: Option<String>,
}

fn media(path: &Path, reason: impl Into<String>) -> Error {
    Error::Media {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn parse_rate(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((n, d)) => {
            let (n, d) = (n.parse::<f64>().ok()?, d.parse::<f64>().ok()?);
            (d > 0.0).then(|| n / d)
        }
        None => s.parse().ok(),
    }
}

/// `select` filter expression picking the given frame numbers.
fn select_filter(indices: &[u64]) -> String {
    let terms: Vec<String> = indices.iter().map(|i| format!("eq(n\\,{i})")).collect();
    format!("select='{}'", terms.join("+"))
}

impl FrameProvider for FfmpegProvider {
    fn probe(&self, path: &Path) -> Result<VideoInfo> {
        let out = Command::new(&self.ffprobe)
            .args(["-v", "error", "-select_streams", "v:0", "-count_frames"])
            .args(["-show_entries", "stream=width,height,r_frame_rate,nb_read_frames,nb_frames"])
            .args(["-of", "json"])
            .arg(path)
            .stdin(Stdio::null())
            .output()
            .map_err(|e| media(path, format!("cannot run {}: {e}", self.ffprobe.display())))?;
        if !out.status.success() {
            return Err(media(path, String::from_utf8_lossy(&out.stderr).trim().to_string()));
        }
        let probe: Probe = serde_json::from_slice(&out.stdout)
            .map_err(|e| media(path, format!("unreadable probe output: {e}")))?;
        let s = probe
            .streams
            .first()
            .ok_or_else(|| media(path, "no video stream"))?;
        let total = s
            .nb_read_frames
            .as_deref()
            .or(s.nb_frames.as_deref())
            .and_then(|n| n.parse::<u64>().ok())
            .ok_or_else(|| media(path, "frame count unavailable"))?;
        let fps = parse_rate(&s.r_frame_rate).ok_or_else(|| media(path, "frame rate unavailable"))?;
        Ok(VideoInfo {
            total_frames: total,
            fps,
            width: s.width,
            height: s.height,
        })
    }

    fn decode(
        &self,
        path: &Path,
        indices: &[u64],
        sink: &mut dyn FnMut(u64, std::result::Result<RgbImage, String>) -> Result<()>,
    ) -> Result<()> {
        if indices.is_empty() {
            return Ok(());
        }
        let info = self.probe(path)?;
        let frame_bytes = info.width as usize * info.height as usize * 3;
        let mut child = Command::new(&self.ffmpeg)
            .args(["-v", "error", "-nostdin", "-i"])
            .arg(path)
            .args(["-map", "0:v:0", "-vf", &select_filter(indices)])
            .args(["-fps_mode", "passthrough", "-f", "rawvideo", "-pix_fmt", "rgb24", "pipe:1"])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| media(path, format!("cannot run {}: {e}", self.ffmpeg.display())))?;
        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut buf = vec![0u8; frame_bytes];
        let mut result = Ok(());
        for &index in indices {
            if let Err(e) = stdout.read_exact(&mut buf) {
                if e.kind() != std::io::ErrorKind::UnexpectedEof {
                    result = Err(media(path, format!("pipe read failed: {e}")));
                }
                break;
            }
            let img = RgbImage::from_raw(info.width, info.height, buf.clone()).expect("frame size");
            if let Err(e) = sink(index, Ok(img)) {
                result = Err(e);
                break;
            }
        }
        drop(stdout);
        let mut stderr = String::new();
        if let Some(mut err) = child.stderr.take() {
            let _ = err.read_to_string(&mut stderr);
        }
        let status = child.wait().map_err(|e| media(path, format!("decoder wait failed: {e}")))?;
        result?;
        if !status.success() && !stderr.trim().is_empty() {
            log::warn!("{}: decoder reported: {}", path.display(), stderr.trim());
        }
        Ok(())
    }
}
