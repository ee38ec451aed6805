use std::path::Path;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use face_affect::detector::{BoundingBox, FaceDetection, Landmarks};
use face_affect::identity::{
    export_review_bundle, read_verification, verification_path, CandidateTrack, ReviewBundle, TrackMember,
    VerificationAction,
};
use face_affect::pipeline::server::router;
use image::RgbImage;
use serde_json::Value;
use tower::ServiceExt;

fn det(x: u32) -> FaceDetection {
    FaceDetection {
        bbox: BoundingBox { x, y: 10, w: 60, h: 70 },
        confidence: 0.99,
        landmarks: Landmarks {
            left_eye: [0.0; 2],
            right_eye: [0.0; 2],
            nose: [0.0; 2],
            mouth_left: [0.0; 2],
            mouth_right: [0.0; 2],
        },
    }
}

fn track(id: u32, x: u32) -> CandidateTrack {
    CandidateTrack {
        track_id: id,
        members: (0..4)
            .map(|f| TrackMember {
                frame_index: f,
                detection_index: id as usize - 1,
                detection: det(x),
            })
            .collect(),
        coverage: 1.0,
    }
}

fn bundle(root: &Path, id: &str) {
    let meta = ReviewBundle {
        video_id: id.into(),
        leader: "L".into(),
        party: "P".into(),
        country_iso: "DE".into(),
        tracks: vec![],
    };
    let crop = |_: &TrackMember| Ok(RgbImage::from_pixel(4, 4, image::Rgb([9, 9, 9])));
    export_review_bundle(root, &meta, &[track(1, 10), track(2, 200)], &crop).unwrap();
}

async fn call(root: &Path, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let resp = router(root.to_path_buf()).oneshot(req).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[tokio::test]
async fn queue_is_sorted_and_shrinks_on_verification() {
    let dir = tempfile::tempdir().unwrap();
    bundle(dir.path(), "vid_b");
    bundle(dir.path(), "vid_a");
    let (s, body) = call(dir.path(), "GET", "/api/videos", None).await;
    assert_eq!(s, StatusCode::OK);
    let ids: Vec<String> = json(&body)
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["video_id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ids, ["vid_a", "vid_b"]);
    assert_eq!(json(&body)[0]["track_count"], 2);

    let (s, _) = call(dir.path(), "POST", "/api/videos/vid_a/verify", Some(r#"{"action":"discard"}"#)).await;
    assert_eq!(s, StatusCode::OK);
    let (_, body) = call(dir.path(), "GET", "/api/videos", None).await;
    assert_eq!(json(&body).as_array().unwrap().len(), 1);
    let (_, body) = call(dir.path(), "GET", "/api/videos/vid_a", None).await;
    assert_eq!(json(&body)["status"], "discarded");
}

#[tokio::test]
async fn empty_queue() {
    let dir = tempfile::tempdir().unwrap();
    let (s, body) = call(dir.path(), "GET", "/api/videos", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body, b"[]");
}

#[tokio::test]
async fn select_writes_manifest_and_repeats_idempotently() {
    let dir = tempfile::tempdir().unwrap();
    bundle(dir.path(), "v1");
    let body = r#"{"action":"select","track_id":2,"annotator":"ana"}"#;
    let (s, first) = call(dir.path(), "POST", "/api/videos/v1/verify", Some(body)).await;
    assert_eq!(s, StatusCode::OK);
    let on_disk = std::fs::read_to_string(verification_path(dir.path(), "v1")).unwrap();
    assert!(on_disk.contains("\"track_id\": 2") || on_disk.contains("\"track_id\":2"), "{on_disk}");
    let rec = read_verification(dir.path(), "v1").unwrap().unwrap();
    assert_eq!((rec.action, rec.track_id), (VerificationAction::Select, Some(2)));

    let (s, second) = call(dir.path(), "POST", "/api/videos/v1/verify", Some(body)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(first, second);

    let (s, _) = call(dir.path(), "POST", "/api/videos/v1/verify", Some(r#"{"action":"discard"}"#)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    // no temp files left behind
    let names: Vec<String> = std::fs::read_dir(dir.path().join("v1"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().all(|n| !n.ends_with(".tmp")), "{names:?}");
}

#[tokio::test]
async fn malformed_submissions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    bundle(dir.path(), "v1");
    for (body, want) in [
        (r#"{"action":"select","track_id":7}"#, StatusCode::UNPROCESSABLE_ENTITY),
        (r#"{"action":"select"}"#, StatusCode::UNPROCESSABLE_ENTITY),
        (r#"{"action":"promote"}"#, StatusCode::UNPROCESSABLE_ENTITY),
        (r#"{not json"#, StatusCode::BAD_REQUEST),
    ] {
        let (s, resp) = call(dir.path(), "POST", "/api/videos/v1/verify", Some(body)).await;
        assert_eq!(s, want, "{body}");
        assert!(!resp.is_empty());
    }
    assert!(read_verification(dir.path(), "v1").unwrap().is_none());
    let (s, _) = call(dir.path(), "POST", "/api/videos/nope/verify", Some(r#"{"action":"discard"}"#)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn crops_are_served_only_from_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    bundle(dir.path(), "v1");
    std::fs::write(dir.path().join("secret.txt"), "x").unwrap();
    let (s, body) = call(dir.path(), "GET", "/api/videos/v1/crops/track_2_1.png", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(&body[1..4], b"PNG");
    for uri in [
        "/api/videos/v1/crops/bundle.json",
        "/api/videos/v1/crops/..%2Fsecret.txt",
        "/api/videos/v1/crops/track_3_1.png",
        "/api/videos/..%2Fv1/crops/track_1_1.png",
    ] {
        let (s, _) = call(dir.path(), "GET", uri, None).await;
        assert_eq!(s, StatusCode::NOT_FOUND, "{uri}");
    }
}

#[tokio::test]
async fn taken_port_is_a_configuration_error() {
    let first = face_affect::pipeline::server::bind(0).await.unwrap();
    let port = first.local_addr().unwrap().port();
    let err = face_affect::pipeline::server::bind(port).await.unwrap_err();
    assert!(err.is_configuration(), "{err}");
}
