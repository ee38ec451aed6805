use std::ffi::{CStr, CString};
use std::ptr;

use face_affect_ffi::*;

fn astronaut() -> image::RgbImage {
    let p = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/astronaut.png");
    image::open(p).unwrap().to_rgb8()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(fa_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn detect_then_classify() {
    let img = astronaut();
    let (w, h) = img.dimensions();
    unsafe {
        let mut det = ptr::null_mut();
        assert_eq!(fa_detector_new(50, &mut det), FaStatus::Ok);
        let mut faces = [FaFace::default(); 4];
        let mut n = 0usize;
        let st = fa_detect(det, img.as_ptr(), w, h, w as usize * 3, faces.as_mut_ptr(), 4, &mut n);
        assert_eq!(st, FaStatus::Ok, "{}", last_error());
        assert_eq!(n, 1);
        assert!(faces[0].confidence > 0.9);
        assert!((faces[0].x as i64 - 179).abs() <= 4 && (faces[0].w as i64 - 89).abs() <= 4);

        // capacity zero still reports the count
        let mut n0 = 0usize;
        assert_eq!(fa_detect(det, img.as_ptr(), w, h, w as usize * 3, ptr::null_mut(), 0, &mut n0), FaStatus::Ok);
        assert_eq!(n0, 1);

        let mut cls = ptr::null_mut();
        assert_eq!(fa_classifier_new(&mut cls), FaStatus::Ok);
        let mut scores = [0.0f64; 7];
        let st = fa_classify_face(cls, img.as_ptr(), w, h, w as usize * 3, &faces[0], scores.as_mut_ptr());
        assert_eq!(st, FaStatus::Ok, "{}", last_error());
        assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));

        fa_classifier_free(cls);
        fa_detector_free(det);
    }
}

#[test]
fn padded_stride_matches_packed() {
    let img = astronaut();
    let (w, h) = img.dimensions();
    let stride = w as usize * 3 + 17;
    let mut padded = vec![0u8; stride * h as usize];
    for y in 0..h as usize {
        let row = &img.as_raw()[y * w as usize * 3..(y + 1) * w as usize * 3];
        padded[y * stride..y * stride + row.len()].copy_from_slice(row);
    }
    unsafe {
        let mut det = ptr::null_mut();
        assert_eq!(fa_detector_new(50, &mut det), FaStatus::Ok);
        let (mut a, mut b) = ([FaFace::default(); 2], [FaFace::default(); 2]);
        let (mut na, mut nb) = (0, 0);
        fa_detect(det, img.as_ptr(), w, h, w as usize * 3, a.as_mut_ptr(), 2, &mut na);
        fa_detect(det, padded.as_ptr(), w, h, stride, b.as_mut_ptr(), 2, &mut nb);
        assert_eq!((na, a), (nb, b));
        fa_detector_free(det);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut det = ptr::null_mut();
        assert_eq!(fa_detector_new(5, &mut det), FaStatus::Config);
        assert!(det.is_null());
        assert!(last_error().contains("12"), "{}", last_error());

        assert_eq!(fa_detector_new(50, ptr::null_mut()), FaStatus::NullPointer);

        let mut n = 0usize;
        assert_eq!(
            fa_detect(ptr::null(), ptr::null(), 1, 1, 3, ptr::null_mut(), 0, &mut n),
            FaStatus::NullPointer
        );

        let a = [1.0];
        let b = [1.0, 2.0, 3.0];
        let mut t = FaTTest::default();
        assert_eq!(fa_t_test(a.as_ptr(), 1, b.as_ptr(), 3, false, &mut t), FaStatus::InsufficientData);
        assert!(!last_error().is_empty());

        fa_detector_free(ptr::null_mut());
        fa_classifier_free(ptr::null_mut());
        fa_string_free(ptr::null_mut());
    }
}

#[test]
fn statistics_match_the_library() {
    let a = [0.61, 0.72, 0.55, 0.68, 0.70];
    let b = [0.41, 0.52, 0.47, 0.38];
    let want = face_affect::stats::two_group_t(&a, &b, face_affect::stats::TTestVariant::Pooled).unwrap();
    let mut t = FaTTest::default();
    unsafe {
        assert_eq!(fa_t_test(a.as_ptr(), a.len(), b.as_ptr(), b.len(), false, &mut t), FaStatus::Ok);
    }
    assert_eq!((t.t, t.df, t.p), (want.t, want.df, want.p));
    assert_eq!(t.df, 7.0);

    let values = [1.0, 2.0, 3.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let sizes = [3usize, 3, 4];
    let want = face_affect::stats::anova_oneway(&[&values[..3], &values[3..6], &values[6..]]).unwrap();
    let mut r = FaAnova::default();
    unsafe {
        assert_eq!(fa_anova(values.as_ptr(), sizes.as_ptr(), 3, &mut r), FaStatus::Ok);
    }
    assert_eq!((r.f, r.p), (want.f, want.p));
    assert_eq!((r.df_between, r.df_within), (2.0, 7.0));
}

fn synthetic_row(i: usize) -> face_affect::affect::SummaryRow {
    use face_affect::affect::{negative_score, SummaryRow, VideoSummary};
    let level = (i % 4) as u8 + 1;
    let neg = 0.3 + 0.1 * level as f64 + 0.01 * (i % 5) as f64;
    let neutral = 0.9 - neg;
    let means = [neg * 0.5, 0.0, neg * 0.2, 0.05, neg * 0.3, 0.05, neutral];
    SummaryRow {
        video_id: format!("v{i}"),
        country_iso: "DE".into(),
        party: format!("p{level}"),
        leader: format!("l{i}"),
        populism_category: face_affect::corpus::PopulismCategory::new(level).unwrap(),
        summary: VideoSummary {
            video_id: format!("v{i}"),
            frame_count: 100,
            means,
            mean_negative: negative_score(&means),
            dominance: [0.4, 0.0, 0.1, 0.0, 0.2, 0.0, 0.3],
            negative_dominant_fraction: neg,
        },
    }
}

#[test]
fn summary_analysis_as_json() {
    let missing = CString::new("/definitely/not/here.csv").unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(fa_analyze_summary_csv(missing.as_ptr(), false, &mut out), FaStatus::Io);
        assert!(out.is_null());
    }

    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("ffi_summary.csv");
    let rows: Vec<_> = (0..24).map(synthetic_row).collect();
    face_affect::affect::write_summary_csv(&path, &rows).unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(fa_analyze_summary_csv(c_path.as_ptr(), false, &mut out), FaStatus::Ok, "{}", last_error());
        let json: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        fa_string_free(out);
        assert_eq!(json["videos"], 24);
        assert_eq!(json["binary"].as_array().unwrap().len(), 2);
        assert!(json["binary"][0]["test"]["t"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn header_is_current() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/face_affect.h")).unwrap();
    for sym in [
        "fa_detector_new",
        "fa_detect",
        "fa_classify_face",
        "fa_t_test",
        "fa_anova",
        "fa_analyze_summary_csv",
        "fa_string_free",
        "fa_last_error_message",
        "typedef struct FaDetector FaDetector;",
        "FA_STATUS_PANIC = 8",
    ] {
        assert!(header.contains(sym), "header lacks {sym}");
    }
}
