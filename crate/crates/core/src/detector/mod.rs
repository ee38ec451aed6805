//! Three-stage cascaded face detection and crop preparation.

mod resample;

use std::cmp::Ordering;
use std::path::Path;

use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelPaths;
use crate::nn::{Model, Tensor};

pub use resample::{resize_area, resize_smooth};

/// Side length of the classifier input.
pub const CROP_SIDE: usize = 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub min_size: u32,
    pub scale_factor: f64,
    /// Score thresholds for the proposal, refine and output stages.
    pub thresholds: [f32; 3],
    /// Overlap thresholds: within a pyramid level, across levels, refine, output.
    pub nms: [f64; 4],
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            min_size: 50,
            scale_factor: 0.709,
            thresholds: [0.6, 0.7, 0.7],
            nms: [0.5, 0.7, 0.7, 0.7],
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_size < 12 {
            return Err(Error::Config(format!("min_size {} is below 12", self.min_size)));
        }
        if !(self.scale_factor > 0.0 && self.scale_factor < 1.0) {
            return Err(Error::Config(format!("scale_factor {} not in (0,1)", self.scale_factor)));
        }
        if self.thresholds.iter().any(|t| !(0.0..=1.0).contains(t))
            || self.nms.iter().any(|t| !(*t > 0.0 && *t < 1.0))
        {
            return Err(Error::Config("detector thresholds out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + self.w as f64 / 2.0, self.y as f64 + self.h as f64 / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w as f64 * self.h as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    pub left_eye: [f32; 2],
    pub right_eye: [f32; 2],
    pub nose: [f32; 2],
    pub mouth_left: [f32; 2],
    pub mouth_right: [f32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceDetection {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub landmarks: Landmarks,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceCrop {
    pub detection: FaceDetection,
    pub display_crop: RgbImage,
    /// Row-major 48x48 luma in [0,1].
    pub model_input: Vec<f32>,
}

impl FaceCrop {
    pub fn model_input_image(&self) -> GrayImage {
        let px = self
            .model_input
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        GrayImage::from_raw(CROP_SIDE as u32, CROP_SIDE as u32, px).expect("48x48 buffer")
    }
}

/// Axis-aligned box with a score, in `(x, y, w, h)` form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
}

impl ScoredBox {
    pub fn iou(&self, other: &ScoredBox) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        let inter = ix.max(0.0) * iy.max(0.0);
        let union = self.w * self.h + other.w * other.h - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

#[derive(Clone, Copy)]
enum Overlap {
    Union,
    Min,
}

/// Greedy suppression over corner boxes; returns kept indices in score order.
/// `inclusive` counts both corner pixels when measuring extents.
fn suppress(
    corners: &[[f64; 4]],
    scores: &[f64],
    threshold: f64,
    mode: Overlap,
    inclusive: bool,
) -> Vec<usize> {
    let one = if inclusive { 1.0 } else { 0.0 };
    let area = |b: &[f64; 4]| ((b[2] - b[0] + one) * (b[3] - b[1] + one)).max(0.0);
    let mut order: Vec<usize> = (0..corners.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut alive = vec![true; corners.len()];
    let mut keep = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if !alive[i] {
            continue;
        }
        keep.push(i);
        let a = &corners[i];
        for &j in &order[pos + 1..] {
            if !alive[j] {
                continue;
            }
            let b = &corners[j];
            let w = (a[2].min(b[2]) - a[0].max(b[0]) + one).max(0.0);
            let h = (a[3].min(b[3]) - a[1].max(b[1]) + one).max(0.0);
            let inter = w * h;
            let denom = match mode {
                Overlap::Union => area(a) + area(b) - inter,
                Overlap::Min => area(a).min(area(b)),
            };
            let o = if denom > 0.0 { inter / denom } else { 0.0 };
            if o >= threshold {
                alive[j] = false;
            }
        }
    }
    keep
}

/// Non-maximum suppression by intersection over union. Survivors are
/// returned in descending score order.
pub fn nms(candidates: &[ScoredBox], iou_threshold: f64) -> Vec<ScoredBox> {
    let corners: Vec<[f64; 4]> = candidates
        .iter()
        .map(|b| [b.x, b.y, b.x + b.w, b.y + b.h])
        .collect();
    let scores: Vec<f64> = candidates.iter().map(|b| b.score).collect();
    suppress(&corners, &scores, iou_threshold, Overlap::Union, false)
        .into_iter()
        .map(|i| candidates[i])
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    b: [f64; 4],
    score: f64,
    reg: [f64; 4],
}

fn nms_candidates(c: Vec<Candidate>, threshold: f64, mode: Overlap) -> Vec<Candidate> {
    let corners: Vec<[f64; 4]> = c.iter().map(|c| c.b).collect();
    let scores: Vec<f64> = c.iter().map(|c| c.score).collect();
    suppress(&corners, &scores, threshold, mode, true)
        .into_iter()
        .map(|i| c[i])
        .collect()
}

fn square(b: [f64; 4]) -> [f64; 4] {
    let w = b[2] - b[0];
    let h = b[3] - b[1];
    let l = w.max(h);
    let x1 = b[0] + w * 0.5 - l * 0.5;
    let y1 = b[1] + h * 0.5 - l * 0.5;
    [x1, y1, x1 + l, y1 + l]
}

fn regress(b: [f64; 4], reg: [f64; 4]) -> [f64; 4] {
    let w = b[2] - b[0] + 1.0;
    let h = b[3] - b[1] + 1.0;
    [b[0] + reg[0] * w, b[1] + reg[1] * h, b[2] + reg[2] * w, b[3] + reg[3] * h]
}

fn trunc(b: [f64; 4]) -> [f64; 4] {
    b.map(f64::trunc)
}

fn normalize(v: f32) -> f32 {
    (v - 127.5) * 0.0078125
}

/// Interleaved RGB to planar normalized CHW, appended to `out`.
fn push_planar(hwc: &[f32], h: usize, w: usize, out: &mut Vec<f32>) {
    for c in 0..3 {
        for i in 0..h * w {
            out.push(normalize(hwc[i * 3 + c]));
        }
    }
}

/// Loaded cascade; immutable and safe to share between threads.
#[derive(Debug)]
pub struct Detector {
    pnet: Model,
    rnet: Model,
    onet: Model,
    config: DetectorConfig,
}

impl Detector {
    pub fn load(paths: &ModelPaths, config: DetectorConfig) -> Result<Detector> {
        config.validate()?;
        let pnet = paths.pnet.load()?;
        let rnet = paths.rnet.load()?;
        let onet = paths.onet.load()?;
        let expect = |m: &Model, dims: &[Option<usize>]| {
            if m.input_dims() != dims {
                Err(Error::Config(format!(
                    "{} expects input {:?}, found {:?}",
                    m.name(),
                    dims,
                    m.input_dims()
                )))
            } else {
                Ok(())
            }
        };
        expect(&pnet, &[Some(1), Some(3), None, None])?;
        expect(&rnet, &[None, Some(3), Some(24), Some(24)])?;
        expect(&onet, &[None, Some(3), Some(48), Some(48)])?;
        Ok(Detector {
            pnet,
            rnet,
            onet,
            config,
        })
    }

    pub fn bundled() -> Result<Detector> {
        Self::load(&ModelPaths::bundled(), DetectorConfig::default())
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Detections of at least `config.min_size` pixels, highest confidence first.
    pub fn detect(&self, frame: &RgbImage) -> Result<Vec<FaceDetection>> {
        let (w, h) = (frame.width() as usize, frame.height() as usize);
        if w == 0 || h == 0 {
            return Err(Error::InvalidParameter("empty frame".into()));
        }
        let img: Vec<f32> = frame.as_raw().iter().map(|&v| v as f32).collect();
        let cfg = &self.config;

        let mut boxes = self.propose(&img, h, w)?;
        if !boxes.is_empty() {
            boxes = self.refine(&img, h, w, boxes)?;
        }
        let mut out = Vec::new();
        if !boxes.is_empty() {
            out = self.output(&img, h, w, boxes)?;
        }
        let min = cfg.min_size;
        out.retain(|d| d.bbox.w >= min && d.bbox.h >= min);
        out.sort_by(|a, b| b.confidence.partial_cmp(&a.confidence).unwrap_or(Ordering::Equal));
        Ok(out)
    }

    fn scales(&self, h: usize, w: usize) -> Vec<f64> {
        let m = 12.0 / self.config.min_size as f64;
        let mut min_layer = h.min(w) as f64 * m;
        let mut scales = Vec::new();
        let mut factor = 1.0;
        while min_layer >= 12.0 {
            scales.push(m * factor);
            factor *= self.config.scale_factor;
            min_layer *= self.config.scale_factor;
        }
        scales
    }

    fn propose(&self, img: &[f32], h: usize, w: usize) -> Result<Vec<Candidate>> {
        let cfg = &self.config;
        let mut all = Vec::new();
        for scale in self.scales(h, w) {
            let hs = (h as f64 * scale).ceil() as usize;
            let ws = (w as f64 * scale).ceil() as usize;
            let mut scaled = resize_area(img, h, w, 3, hs, ws);
            for v in &mut scaled {
                *v = v.round();
            }
            let mut data = Vec::with_capacity(scaled.len());
            push_planar(&scaled, hs, ws, &mut data);
            let out = self.pnet.run(Tensor::new(vec![1, 3, hs, ws], data)?)?;
            let (prob, reg) = (&out["prob"], &out["reg"]);
            let (oh, ow) = (prob.shape()[2], prob.shape()[3]);
            let plane = oh * ow;
            let mut level = Vec::new();
            for row in 0..oh {
                for col in 0..ow {
                    let i = row * ow + col;
                    let score = prob.data()[plane + i];
                    if score < cfg.thresholds[0] {
                        continue;
                    }
                    let (r, c) = (row as f64, col as f64);
                    let b = [
                        ((2.0 * c + 1.0) / scale).trunc(),
                        ((2.0 * r + 1.0) / scale).trunc(),
                        ((2.0 * c + 12.0) / scale).trunc(),
                        ((2.0 * r + 12.0) / scale).trunc(),
                    ];
                    let g = |k: usize| reg.data()[k * plane + i] as f64;
                    level.push(Candidate {
                        b,
                        score: score as f64,
                        reg: [g(0), g(1), g(2), g(3)],
                    });
                }
            }
            all.extend(nms_candidates(level, cfg.nms[0], Overlap::Union));
        }
        if all.is_empty() {
            return Ok(all);
        }
        let all = nms_candidates(all, cfg.nms[1], Overlap::Union);
        Ok(all
            .into_iter()
            .map(|c| {
                let rw = c.b[2] - c.b[0];
                let rh = c.b[3] - c.b[1];
                let b = [
                    c.b[0] + c.reg[0] * rw,
                    c.b[1] + c.reg[1] * rh,
                    c.b[2] + c.reg[2] * rw,
                    c.b[3] + c.reg[3] * rh,
                ];
                Candidate {
                    b: trunc(square(b)),
                    ..c
                }
            })
            .collect())
    }

    /// Crops each box (1-based inclusive corners, zero outside the frame),
    /// resizes to `side` and batches as normalized NCHW.
    fn batch(&self, img: &[f32], h: usize, w: usize, boxes: &[Candidate], side: usize) -> Tensor {
        let mut data = Vec::with_capacity(boxes.len() * 3 * side * side);
        for c in boxes {
            let x0 = c.b[0] as i64 - 1;
            let y0 = c.b[1] as i64 - 1;
            let tw = (c.b[2] - c.b[0] + 1.0).max(1.0) as usize;
            let th = (c.b[3] - c.b[1] + 1.0).max(1.0) as usize;
            let mut tmp = vec![0.0f32; th * tw * 3];
            for ty in 0..th {
                let sy = y0 + ty as i64;
                if sy < 0 || sy >= h as i64 {
                    continue;
                }
                for tx in 0..tw {
                    let sx = x0 + tx as i64;
                    if sx < 0 || sx >= w as i64 {
                        continue;
                    }
                    let s = (sy as usize * w + sx as usize) * 3;
                    let d = (ty * tw + tx) * 3;
                    tmp[d..d + 3].copy_from_slice(&img[s..s + 3]);
                }
            }
            let r = resize_area(&tmp, th, tw, 3, side, side);
            push_planar(&r, side, side, &mut data);
        }
        Tensor::new(vec![boxes.len(), 3, side, side], data).expect("batch shape")
    }

    fn valid(boxes: Vec<Candidate>) -> Vec<Candidate> {
        boxes
            .into_iter()
            .filter(|c| c.b[2] >= c.b[0] && c.b[3] >= c.b[1])
            .collect()
    }

    fn refine(&self, img: &[f32], h: usize, w: usize, boxes: Vec<Candidate>) -> Result<Vec<Candidate>> {
        let boxes = Self::valid(boxes);
        if boxes.is_empty() {
            return Ok(boxes);
        }
        let out = self.rnet.run(self.batch(img, h, w, &boxes, 24))?;
        let (prob, reg) = (out["prob"].data(), out["reg"].data());
        let kept: Vec<Candidate> = boxes
            .iter()
            .enumerate()
            .filter(|(i, _)| prob[i * 2 + 1] > self.config.thresholds[1])
            .map(|(i, c)| Candidate {
                b: c.b,
                score: prob[i * 2 + 1] as f64,
                reg: std::array::from_fn(|k| reg[i * 4 + k] as f64),
            })
            .collect();
        Ok(nms_candidates(kept, self.config.nms[2], Overlap::Union)
            .into_iter()
            .map(|c| Candidate {
                b: square(regress(c.b, c.reg)),
                ..c
            })
            .collect())
    }

    fn output(&self, img: &[f32], h: usize, w: usize, boxes: Vec<Candidate>) -> Result<Vec<FaceDetection>> {
        let boxes: Vec<Candidate> = Self::valid(
            boxes
                .into_iter()
                .map(|c| Candidate { b: trunc(c.b), ..c })
                .collect(),
        );
        if boxes.is_empty() {
            return Ok(Vec::new());
        }
        let out = self.onet.run(self.batch(img, h, w, &boxes, 48))?;
        let (prob, reg, lm) = (
            out["prob"].data(),
            out["reg"].data(),
            out["landmarks"].data(),
        );
        let mut kept = Vec::new();
        let mut marks = Vec::new();
        for (i, c) in boxes.iter().enumerate() {
            let score = prob[i * 2 + 1];
            if score <= self.config.thresholds[2] {
                continue;
            }
            let bw = c.b[2] - c.b[0] + 1.0;
            let bh = c.b[3] - c.b[1] + 1.0;
            let pt = |k: usize| {
                [
                    (bw * lm[i * 10 + k] as f64 + c.b[0] - 1.0) as f32,
                    (bh * lm[i * 10 + 5 + k] as f64 + c.b[1] - 1.0) as f32,
                ]
            };
            marks.push(Landmarks {
                left_eye: pt(0),
                right_eye: pt(1),
                nose: pt(2),
                mouth_left: pt(3),
                mouth_right: pt(4),
            });
            let r: [f64; 4] = std::array::from_fn(|k| reg[i * 4 + k] as f64);
            kept.push(Candidate {
                b: regress(c.b, r),
                score: score as f64,
                reg: r,
            });
        }
        let corners: Vec<[f64; 4]> = kept.iter().map(|c| c.b).collect();
        let scores: Vec<f64> = kept.iter().map(|c| c.score).collect();
        let keep = suppress(&corners, &scores, self.config.nms[3], Overlap::Min, true);
        Ok(keep
            .into_iter()
            .filter_map(|i| {
                let b = kept[i].b;
                let x = b[0].trunc().max(0.0);
                let y = b[1].trunc().max(0.0);
                let bw = (b[2] - x).trunc().min(w as f64 - x);
                let bh = (b[3] - y).trunc().min(h as f64 - y);
                if x >= w as f64 || y >= h as f64 || bw <= 0.0 || bh <= 0.0 {
                    return None;
                }
                Some(FaceDetection {
                    bbox: BoundingBox {
                        x: x as u32,
                        y: y as u32,
                        w: bw as u32,
                        h: bh as u32,
                    },
                    confidence: kept[i].score,
                    landmarks: marks[i],
                })
            })
            .collect())
    }
}

/// Square region about the box center, clipped to the frame: `(x, y, w, h)`.
fn square_region(frame: &RgbImage, b: &BoundingBox) -> (u32, u32, u32, u32) {
    let side = b.w.max(b.h) as f64;
    let (cx, cy) = b.center();
    let clip = |lo: f64, limit: u32| lo.round().clamp(0.0, limit as f64) as u32;
    let x0 = clip(cx - side / 2.0, frame.width());
    let y0 = clip(cy - side / 2.0, frame.height());
    let x1 = clip(cx + side / 2.0, frame.width());
    let y1 = clip(cy + side / 2.0, frame.height());
    (x0, y0, x1 - x0, y1 - y0)
}

/// Cuts the squared face region and prepares the 48x48 luma classifier input.
pub fn crop_and_align(frame: &RgbImage, det: &FaceDetection) -> Result<FaceCrop> {
    let b = &det.bbox;
    if b.w == 0 || b.h == 0 {
        return Err(Error::Crop(format!("degenerate box {}x{}", b.w, b.h)));
    }
    if b.x >= frame.width() || b.y >= frame.height() {
        return Err(Error::Crop(format!("box origin ({}, {}) outside frame", b.x, b.y)));
    }
    let (x0, y0, cw, ch) = square_region(frame, b);
    if cw == 0 || ch == 0 {
        return Err(Error::Crop("crop region is empty".into()));
    }
    let display = image::imageops::crop_imm(frame, x0, y0, cw, ch).to_image();
    let luma: Vec<f32> = display
        .pixels()
        .map(|p| 0.299 * p[0] as f32 + 0.587 * p[1] as f32 + 0.114 * p[2] as f32)
        .collect();
    let resized = resize_smooth(&luma, ch as usize, cw as usize, 1, CROP_SIDE, CROP_SIDE);
    let model_input = resized.iter().map(|v| (v / 255.0).clamp(0.0, 1.0)).collect();
    Ok(FaceCrop {
        detection: det.clone(),
        display_crop: display,
        model_input,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDetections {
    pub frame_index: u64,
    pub detections: Vec<FaceDetection>,
}

/// Writes per-frame detections as a JSON array.
pub fn write_debug_json(path: &Path, frames: &[FrameDetections]) -> Result<()> {
    crate::io::write_json_atomic(path, &frames)
}
