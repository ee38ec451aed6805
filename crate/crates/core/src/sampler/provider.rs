use std::collections::BTreeSet;
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VideoInfo {
    pub total_frames: u64,
    pub fps: f64,
    pub width: u32,
    pub height: u32,
}

/// Decoder boundary. Implementations deliver requested frames in index
/// order; a frame that cannot be decoded is reported as `Err(reason)`.
pub trait FrameProvider: Send + Sync {
    fn probe(&self, path: &Path) -> Result<VideoInfo>;

    fn decode(
        &self,
        path: &Path,
        indices: &[u64],
        sink: &mut dyn FnMut(u64, std::result::Result<RgbImage, String>) -> Result<()>,
    ) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSample {
    pub video_id: String,
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub image: RgbImage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub frame_index: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub samples: Vec<FrameSample>,
    pub skipped: Vec<SkipRecord>,
}

/// Decodes `indices` and hands each sample to `on_frame` as it arrives.
/// Returns the skip records; fails with `EmptyVideo` when nothing decoded.
pub fn stream_frames(
    video_id: &str,
    path: &Path,
    info: &VideoInfo,
    indices: &[u64],
    provider: &dyn FrameProvider,
    on_frame: &mut dyn FnMut(FrameSample) -> Result<()>,
) -> Result<Vec<SkipRecord>> {
    if let Some(bad) = indices.iter().find(|&&i| i >= info.total_frames) {
        return Err(Error::InvalidParameter(format!(
            "frame index {bad} out of range for {} frames",
            info.total_frames
        )));
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("frame indices must be strictly increasing".into()));
    }
    if info.fps.is_nan() || info.fps <= 0.0 {
        return Err(Error::Media {
            path: path.to_path_buf(),
            reason: format!("invalid frame rate {}", info.fps),
        });
    }
    let mut pending: BTreeSet<u64> = indices.iter().copied().collect();
    let mut skipped = Vec::new();
    let mut decoded = 0usize;
    provider.decode(path, indices, &mut |index, frame| {
        if !pending.remove(&index) {
            return Err(Error::Media {
                path: path.to_path_buf(),
                reason: format!("decoder returned unrequested frame {index}"),
            });
        }
        match frame {
            Ok(image) => {
                decoded += 1;
                on_frame(FrameSample {
                    video_id: video_id.to_string(),
                    frame_index: index,
                    timestamp_s: index as f64 / info.fps,
                    image,
                })
            }
            Err(reason) => {
                skipped.push(SkipRecord {
                    frame_index: index,
                    reason,
                });
                Ok(())
            }
        }
    })?;
    skipped.extend(pending.into_iter().map(|frame_index| SkipRecord {
        frame_index,
        reason: "frame not delivered by decoder".into(),
    }));
    skipped.sort_by_key(|s| s.frame_index);
    if decoded == 0 {
        return Err(Error::EmptyVideo(path.to_path_buf()));
    }
    Ok(skipped)
}

/// Collecting form of [`stream_frames`].
pub fn extract_frames(
    video_id: &str,
    path: &Path,
    indices: &[u64],
    provider: &dyn FrameProvider,
) -> Result<Extraction> {
    let info = provider.probe(path)?;
    let mut samples = Vec::new();
    let skipped = stream_frames(video_id, path, &info, indices, provider, &mut |s| {
        samples.push(s);
        Ok(())
    })?;
    Ok(Extraction { samples, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Stub {
        total: u64,
        corrupt: Vec<u64>,
    }

    impl FrameProvider for Stub {
        fn probe(&self, _: &Path) -> Result<VideoInfo> {
            Ok(VideoInfo {
                total_frames: self.total,
                fps: 25.0,
                width: 4,
                height: 2,
            })
        }

        fn decode(
            &self,
            _: &Path,
            indices: &[u64],
            sink: &mut dyn FnMut(u64, std::result::Result<RgbImage, String>) -> Result<()>,
        ) -> Result<()> {
            for &i in indices {
                if self.corrupt.contains(&i) {
                    sink(i, Err("bad frame".into()))?;
                } else {
                    sink(i, Ok(RgbImage::new(4, 2)))?;
                }
            }
            Ok(())
        }
    }

    #[test]
    fn healthy_clip_yields_all_frames() {
        let stub = Stub { total: 100, corrupt: vec![] };
        let idx: Vec<u64> = (0..10).map(|i| i * 10).collect();
        let ex = extract_frames("v", Path::new("v.y4m"), &idx, &stub).unwrap();
        assert_eq!(ex.samples.len(), 10);
        assert!(ex.skipped.is_empty());
        assert_eq!(ex.samples[3].frame_index, 30);
        assert!((ex.samples[3].timestamp_s - 1.2).abs() < 1e-12);
    }

    #[test]
    fn corrupt_frame_is_skipped() {
        let stub = Stub { total: 100, corrupt: vec![40] };
        let idx: Vec<u64> = (0..10).map(|i| i * 10).collect();
        let ex = extract_frames("v", Path::new("v.y4m"), &idx, &stub).unwrap();
        assert_eq!(ex.samples.len(), 9);
        assert_eq!(ex.skipped, vec![SkipRecord { frame_index: 40, reason: "bad frame".into() }]);
    }

    #[test]
    fn nothing_decoded_is_empty_video() {
        let stub = Stub { total: 3, corrupt: vec![0, 1, 2] };
        let err = extract_frames("v", Path::new("v.y4m"), &[0, 1, 2], &stub).unwrap_err();
        assert!(matches!(err, Error::EmptyVideo(_)));
    }

    #[test]
    fn out_of_range_index_rejected() {
        let stub = Stub { total: 3, corrupt: vec![] };
        assert!(extract_frames("v", Path::new("v.y4m"), &[0, 3], &stub).is_err());
    }
}
