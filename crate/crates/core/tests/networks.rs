//! The converted graphs reproduce the original Keras networks.

use face_affect::models::ModelPaths;
use face_affect::nn::Tensor;
use serde_json::Value;

fn goldens() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/network_goldens.json");
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn pattern(n: usize, offset: f64) -> Vec<f32> {
    (0..n)
        .map(|i| {
            let i = i as f64;
            ((0.731 * i + offset).sin() * (0.0173 * i).cos()) as f32
        })
        .collect()
}

fn floats(v: &Value) -> Vec<f32> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap() as f32).collect()
}

fn shape(v: &Value) -> Vec<usize> {
    v.as_array().unwrap().iter().map(|x| x.as_u64().unwrap() as usize).collect()
}

fn assert_close(got: &Tensor, want: &[f32], tol: f32, what: &str) {
    assert_eq!(got.len(), want.len(), "{what}: length");
    let worst = got
        .data()
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f32, f32::max);
    assert!(worst < tol, "{what}: max abs error {worst}");
}

#[test]
fn pnet_matches_reference() {
    let g = &goldens()["pnet"];
    let model = ModelPaths::bundled().pnet.load().unwrap();
    let s = shape(&g["input_shape"]);
    let input = Tensor::new(s.clone(), pattern(s.iter().product(), 0.0)).unwrap();
    let out = model.run(input).unwrap();
    assert_eq!(out["prob"].shape(), shape(&g["prob_shape"]).as_slice());
    assert_close(&out["prob"], &floats(&g["prob"]), 1e-4, "prob");
    assert_close(&out["reg"], &floats(&g["reg"]), 1e-4, "reg");
}

#[test]
fn rnet_matches_reference() {
    let g = &goldens()["rnet"];
    let model = ModelPaths::bundled().rnet.load().unwrap();
    let s = shape(&g["input_shape"]);
    let input = Tensor::new(s.clone(), pattern(s.iter().product(), 0.5)).unwrap();
    let out = model.run(input).unwrap();
    assert_close(&out["prob"], &floats(&g["prob"]), 1e-4, "prob");
    assert_close(&out["reg"], &floats(&g["reg"]), 1e-4, "reg");
}

#[test]
fn onet_matches_reference() {
    let g = &goldens()["onet"];
    let model = ModelPaths::bundled().onet.load().unwrap();
    let s = shape(&g["input_shape"]);
    let input = Tensor::new(s.clone(), pattern(s.iter().product(), 1.0)).unwrap();
    let out = model.run(input).unwrap();
    assert_close(&out["prob"], &floats(&g["prob"]), 1e-4, "prob");
    assert_close(&out["reg"], &floats(&g["reg"]), 1e-4, "reg");
    assert_close(&out["landmarks"], &floats(&g["landmarks"]), 1e-4, "landmarks");
}

#[test]
fn emotion_matches_reference() {
    let g = goldens();
    let model = ModelPaths::bundled().emotion.load().unwrap();
    let input: Vec<f32> = pattern(48 * 48, 2.0).iter().map(|v| 0.5 + 0.5 * v).collect();
    let out = model.run(Tensor::new(vec![1, 1, 48, 48], input).unwrap()).unwrap();
    assert_close(&out["scores"], &floats(&g["emotion"]["scores"]), 1e-4, "scores");

    let gray = Tensor::new(vec![1, 1, 48, 48], vec![0.5; 48 * 48]).unwrap();
    let out = model.run(gray).unwrap();
    assert_close(&out["scores"], &floats(&g["emotion_gray"]["scores"]), 1e-4, "gray scores");
}

#[test]
fn tampered_model_is_rejected() {
    let mut paths = ModelPaths::bundled();
    paths.emotion.sha256 = "00".repeat(32);
    let err = paths.emotion.load().unwrap_err();
    assert!(err.is_configuration(), "{err}");
}

#[test]
fn wrong_input_shape_is_rejected() {
    let model = ModelPaths::bundled().emotion.load().unwrap();
    let bad = Tensor::new(vec![1, 1, 40, 40], vec![0.5; 1600]).unwrap();
    assert!(model.run(bad).is_err());
}
