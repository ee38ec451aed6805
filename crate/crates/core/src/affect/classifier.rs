use crate::detector::{FaceCrop, CROP_SIDE};
use crate::error::{Error, Result};
use crate::models::{ModelFile, ModelPaths};
use crate::nn::{Model, Tensor};

use super::EmotionScores;

const PIXELS: usize = CROP_SIDE * CROP_SIDE;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub scores: EmotionScores,
    /// Raw output missed the simplex tolerance and was rescaled.
    pub renormalized: bool,
}

/// The 48x48 grayscale emotion classifier. Immutable once loaded.
#[derive(Debug)]
pub struct Classifier {
    model: Model,
}

impl Classifier {
    pub fn load(file: &ModelFile) -> Result<Classifier> {
        let model = file.load()?;
        let dims = model.input_dims();
        let side = Some(CROP_SIDE);
        if dims.len() != 4 || dims[1] != Some(1) || dims[2] != side || dims[3] != side {
            return Err(Error::Config(format!(
                "classifier input {dims:?} is not [n, 1, 48, 48]"
            )));
        }
        if !model.output_names().iter().any(|n| n == "scores") {
            return Err(Error::Config("classifier has no `scores` output".into()));
        }
        Ok(Classifier { model })
    }

    pub fn bundled() -> Result<Classifier> {
        Self::load(&ModelPaths::bundled().emotion)
    }

    pub fn sha256(&self) -> &str {
        self.model.sha256()
    }

    /// Scores a batch of row-major 48x48 inputs with values in [0,1].
    pub fn classify_batch(&self, inputs: &[&[f32]]) -> Result<Vec<Classification>> {
        if inputs.is_empty() {
            return Ok(Vec::new());
        }
        let mut data = Vec::with_capacity(inputs.len() * PIXELS);
        for input in inputs {
            if input.len() != PIXELS {
                return Err(Error::Config(format!(
                    "classifier input has {} values, expected {PIXELS}",
                    input.len()
                )));
            }
            if input.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidParameter("classifier input outside [0,1]".into()));
            }
            data.extend_from_slice(input);
        }
        let tensor = Tensor::new(vec![inputs.len(), 1, CROP_SIDE, CROP_SIDE], data)?;
        let out = self.model.run(tensor)?;
        out["scores"]
            .data()
            .chunks(7)
            .map(|raw| {
                let (scores, renormalized) = EmotionScores::from_model_output(raw)?;
                Ok(Classification {
                    scores,
                    renormalized,
                })
            })
            .collect()
    }

    pub fn classify(&self, input: &[f32]) -> Result<Classification> {
        Ok(self.classify_batch(&[input])?.remove(0))
    }
}

pub fn classify_emotions(crop: &FaceCrop, classifier: &Classifier) -> Result<Classification> {
    classifier.classify(&crop.model_input)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_crop_is_stable() {
        let c = Classifier::bundled().unwrap();
        let gray = vec![0.5f32; PIXELS];
        let first = c.classify(&gray).unwrap();
        for _ in 0..100 {
            assert_eq!(c.classify(&gray).unwrap(), first);
        }
        let sum: f64 = first.scores.values().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn batch_matches_single() {
        let c = Classifier::bundled().unwrap();
        let a: Vec<f32> = (0..PIXELS).map(|i| (i % 48) as f32 / 47.0).collect();
        let b: Vec<f32> = (0..PIXELS).map(|i| (i / 48) as f32 / 47.0).collect();
        let batch = c.classify_batch(&[&a, &b]).unwrap();
        let single = c.classify(&b).unwrap();
        for (x, y) in batch[1].scores.values().iter().zip(single.scores.values()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn wrong_shape_is_configuration_error() {
        let c = Classifier::bundled().unwrap();
        let err = c.classify(&[0.5; 40 * 40]).unwrap_err();
        assert!(err.is_configuration(), "{err}");
    }

    #[test]
    fn out_of_range_input_rejected() {
        let c = Classifier::bundled().unwrap();
        assert!(c.classify(&vec![2.0; PIXELS]).is_err());
    }
}
