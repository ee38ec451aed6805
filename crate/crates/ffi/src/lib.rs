//! C interface: opaque detector and classifier handles, a few statistical
//! routines, and whole-table analysis returning JSON.
//!
//! Every fallible function returns an [`FaStatus`]; the message for the most
//! recent failure on the calling thread is available from
//! [`fa_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use face_affect::affect::{read_summary_csv, Classifier};
use face_affect::detector::{crop_and_align, BoundingBox, Detector, DetectorConfig, FaceDetection, Landmarks};
use face_affect::models::ModelPaths;
use face_affect::stats::{anova_oneway, two_group_t, TTestVariant};
use face_affect::Error;
use image::RgbImage;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Data = 5,
    InsufficientData = 6,
    Media = 7,
    Panic = 8,
}

/// Face detector handle.
pub struct FaDetector(Detector);

/// Emotion classifier handle.
pub struct FaClassifier(Classifier);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FaFace {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub confidence: f64,
    /// left eye, right eye, nose, mouth left, mouth right as (x, y) pairs
    pub landmarks: [f32; 10],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FaTTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FaAnova {
    pub f: f64,
    pub df_between: f64,
    pub df_within: f64,
    pub p: f64,
    pub eta_squared: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FaStatus {
    match e {
        Error::Config(_) | Error::Model(_) => FaStatus::Config,
        Error::Io { .. } => FaStatus::Io,
        Error::InsufficientData(_) | Error::EmptyInput(_) | Error::DegenerateVariance(_) => {
            FaStatus::InsufficientData
        }
        Error::InvalidParameter(_) | Error::Crop(_) => FaStatus::InvalidArgument,
        Error::Media { .. } | Error::EmptyVideo(_) => FaStatus::Media,
        _ => FaStatus::Data,
    }
}

/// Runs `f`, recording failures and containing panics.
fn guard(f: impl FnOnce() -> Result<(), (FaStatus, String)>) -> FaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FaStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FaStatus::Panic
        }
    }
}

fn lift(e: Error) -> (FaStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FaStatus, String) {
    (FaStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: String) -> (FaStatus, String) {
    (FaStatus::InvalidArgument, msg)
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], (FaStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn image_from(rgb: *const u8, width: u32, height: u32, stride: usize) -> Result<RgbImage, (FaStatus, String)> {
    if width == 0 || height == 0 {
        return Err(invalid("image has zero size".into()));
    }
    let row = width as usize * 3;
    if stride < row {
        return Err(invalid(format!("stride {stride} shorter than a row of {row} bytes")));
    }
    let len = stride
        .checked_mul(height as usize - 1)
        .and_then(|n| n.checked_add(row))
        .ok_or_else(|| invalid("image too large".into()))?;
    let bytes = slice(rgb, len, "rgb")?;
    let mut buf = Vec::with_capacity(row * height as usize);
    for y in 0..height as usize {
        buf.extend_from_slice(&bytes[y * stride..y * stride + row]);
    }
    Ok(RgbImage::from_raw(width, height, buf).expect("buffer sized for image"))
}

fn to_face(d: &FaceDetection) -> FaFace {
    let l = &d.landmarks;
    let mut landmarks = [0.0; 10];
    for (i, p) in [l.left_eye, l.right_eye, l.nose, l.mouth_left, l.mouth_right].iter().enumerate() {
        landmarks[2 * i] = p[0];
        landmarks[2 * i + 1] = p[1];
    }
    FaFace {
        x: d.bbox.x,
        y: d.bbox.y,
        w: d.bbox.w,
        h: d.bbox.h,
        confidence: d.confidence,
        landmarks,
    }
}

fn from_face(f: &FaFace) -> FaceDetection {
    let p = |i: usize| [f.landmarks[2 * i], f.landmarks[2 * i + 1]];
    FaceDetection {
        bbox: BoundingBox {
            x: f.x,
            y: f.y,
            w: f.w,
            h: f.h,
        },
        confidence: f.confidence,
        landmarks: Landmarks {
            left_eye: p(0),
            right_eye: p(1),
            nose: p(2),
            mouth_left: p(3),
            mouth_right: p(4),
        },
    }
}

/// Message for the last failure on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn fa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads the bundled detector, verifying model hashes. `min_face_px` below
/// 12 is rejected.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn fa_detector_new(min_face_px: u32, out: *mut *mut FaDetector) -> FaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = DetectorConfig {
            min_size: min_face_px,
            ..DetectorConfig::default()
        };
        let det = Detector::load(&ModelPaths::bundled(), cfg).map_err(lift)?;
        *out = Box::into_raw(Box::new(FaDetector(det)));
        Ok(())
    })
}

/// # Safety
/// `det` must be null or a handle from [`fa_detector_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fa_detector_free(det: *mut FaDetector) {
    if !det.is_null() {
        drop(Box::from_raw(det));
    }
}

/// Detects faces in a packed RGB image, best first. Up to `capacity` faces
/// are written to `faces`; `count` receives the total found, which may
/// exceed `capacity`.
///
/// # Safety
/// `rgb` must hold `stride * (height - 1) + 3 * width` readable bytes,
/// `faces` room for `capacity` entries, and `count` one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn fa_detect(
    det: *const FaDetector,
    rgb: *const u8,
    width: u32,
    height: u32,
    stride: usize,
    faces: *mut FaFace,
    capacity: usize,
    count: *mut usize,
) -> FaStatus {
    guard(|| {
        let det = det.as_ref().ok_or_else(|| null("detector"))?;
        if count.is_null() {
            return Err(null("count"));
        }
        if capacity > 0 && faces.is_null() {
            return Err(null("faces"));
        }
        let img = image_from(rgb, width, height, stride)?;
        let found = det.0.detect(&img).map_err(lift)?;
        for (i, d) in found.iter().take(capacity).enumerate() {
            *faces.add(i) = to_face(d);
        }
        *count = found.len();
        Ok(())
    })
}

/// Loads the bundled emotion classifier, verifying its hash.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn fa_classifier_new(out: *mut *mut FaClassifier) -> FaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = Classifier::bundled().map_err(lift)?;
        *out = Box::into_raw(Box::new(FaClassifier(c)));
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a handle from [`fa_classifier_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fa_classifier_free(c: *mut FaClassifier) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Crops and aligns `face` from the image and writes seven emotion
/// probabilities (angry, disgust, fear, happy, sad, surprise, neutral) to
/// `scores`.
///
/// # Safety
/// Image buffer as for [`fa_detect`]; `face` must point to one face and
/// `scores` to room for seven doubles.
#[no_mangle]
pub unsafe extern "C" fn fa_classify_face(
    c: *const FaClassifier,
    rgb: *const u8,
    width: u32,
    height: u32,
    stride: usize,
    face: *const FaFace,
    scores: *mut f64,
) -> FaStatus {
    guard(|| {
        let c = c.as_ref().ok_or_else(|| null("classifier"))?;
        let face = face.as_ref().ok_or_else(|| null("face"))?;
        if scores.is_null() {
            return Err(null("scores"));
        }
        let img = image_from(rgb, width, height, stride)?;
        let crop = crop_and_align(&img, &from_face(face)).map_err(lift)?;
        let out = c.0.classify(&crop.model_input).map_err(lift)?;
        std::ptr::copy_nonoverlapping(out.scores.values().as_ptr(), scores, 7);
        Ok(())
    })
}

/// Two-sample t-test, two-sided. `welch` selects unequal variances;
/// otherwise the pooled-variance test is used.
///
/// # Safety
/// `a` and `b` must hold `na` and `nb` doubles; `out` one [`FaTTest`].
#[no_mangle]
pub unsafe extern "C" fn fa_t_test(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    welch: bool,
    out: *mut FaTTest,
) -> FaStatus {
    guard(|| {
        let (a, b) = (slice(a, na, "a")?, slice(b, nb, "b")?);
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let variant = if welch { TTestVariant::Welch } else { TTestVariant::Pooled };
        let r = two_group_t(a, b, variant).map_err(lift)?;
        *out = FaTTest { t: r.t, df: r.df, p: r.p };
        Ok(())
    })
}

/// One-way ANOVA over `k` groups stored back to back in `values`, with
/// `sizes[i]` observations in group `i`.
///
/// # Safety
/// `sizes` must hold `k` entries and `values` their sum; `out` one [`FaAnova`].
#[no_mangle]
pub unsafe extern "C" fn fa_anova(values: *const f64, sizes: *const usize, k: usize, out: *mut FaAnova) -> FaStatus {
    guard(|| {
        let sizes = slice(sizes, k, "sizes")?;
        let total = sizes
            .iter()
            .try_fold(0usize, |acc, &n| acc.checked_add(n))
            .ok_or_else(|| invalid("group sizes overflow".into()))?;
        let values = slice(values, total, "values")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let mut groups = Vec::with_capacity(k);
        let mut at = 0;
        for &n in sizes {
            groups.push(&values[at..at + n]);
            at += n;
        }
        let r = anova_oneway(&groups).map_err(lift)?;
        *out = FaAnova {
            f: r.f,
            df_between: r.df_between as f64,
            df_within: r.df_within as f64,
            p: r.p,
            eta_squared: r.eta_squared,
        };
        Ok(())
    })
}

/// Full statistical report for a per-video summary CSV, as JSON. Free the
/// result with [`fa_string_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn fa_analyze_summary_csv(path: *const c_char, welch: bool, out_json: *mut *mut c_char) -> FaStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not UTF-8".into()))?;
        let rows = read_summary_csv(Path::new(path)).map_err(lift)?;
        let variant = if welch { TTestVariant::Welch } else { TTestVariant::Pooled };
        let label = Path::new(path).file_stem().and_then(|s| s.to_str()).unwrap_or("summary");
        let report = face_affect::stats::analyze(&rows, variant, label).map_err(lift)?;
        let json = serde_json::to_string(&report).map_err(|e| (FaStatus::Data, e.to_string()))?;
        *out_json = CString::new(json).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn fa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
