use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the simplex sum of stored scores.
pub const SIMPLEX_EPS: f64 = 1e-3;

/// The seven classifier labels, in canonical order. The order doubles as the
/// argmax tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Angry,
    Disgust,
    Fear,
    Happy,
    Sad,
    Surprise,
    Neutral,
}

impl Emotion {
    pub const ALL: [Emotion; 7] = [
        Emotion::Angry,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Happy,
        Emotion::Sad,
        Emotion::Surprise,
        Emotion::Neutral,
    ];

    pub const NEGATIVE: [Emotion; 4] = [Emotion::Angry, Emotion::Disgust, Emotion::Fear, Emotion::Sad];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Angry => "angry",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Happy => "happy",
            Emotion::Sad => "sad",
            Emotion::Surprise => "surprise",
            Emotion::Neutral => "neutral",
        }
    }

    pub fn is_negative(self) -> bool {
        Emotion::NEGATIVE.contains(&self)
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A 7-component composition on the probability simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionScores([f64; 7]);

impl EmotionScores {
    /// Validates components in [0, 1] summing to 1 within [`SIMPLEX_EPS`].
    pub fn new(values: [f64; 7]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "emotion scores must lie in [0, 1]: {values:?}"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_EPS {
            return Err(Error::InvalidParameter(format!(
                "emotion scores sum to {sum}, expected 1 ± {SIMPLEX_EPS}"
            )));
        }
        Ok(EmotionScores(values))
    }

    /// Accepts raw model output, renormalizing once when the sum is off.
    /// The flag reports whether renormalization happened.
    pub fn from_model_output(raw: &[f32]) -> Result<(Self, bool)> {
        if raw.len() != 7 {
            return Err(Error::Model(format!(
                "classifier produced {} scores, expected 7",
                raw.len()
            )));
        }
        let mut values = [0.0; 7];
        for (v, r) in values.iter_mut().zip(raw) {
            if !r.is_finite() || *r < 0.0 {
                return Err(Error::Model(format!("invalid classifier output {raw:?}")));
            }
            *v = f64::from(*r);
        }
        let sum: f64 = values.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Model("classifier output sums to zero".into()));
        }
        if (sum - 1.0).abs() <= SIMPLEX_EPS {
            return Ok((EmotionScores(values), false));
        }
        values.iter_mut().for_each(|v| *v /= sum);
        Ok((EmotionScores(values), true))
    }

    pub fn values(&self) -> &[f64; 7] {
        &self.0
    }

    pub fn get(&self, e: Emotion) -> f64 {
        self.0[e.index()]
    }

    /// Sum of the negative components: angry + disgust + fear + sad.
    pub fn negative(&self) -> f64 {
        negative_score(&self.0)
    }

    pub fn dominant(&self) -> Emotion {
        dominant_label(&self.0)
    }
}

pub fn negative_score(values: &[f64; 7]) -> f64 {
    Emotion::NEGATIVE.iter().map(|e| values[e.index()]).sum()
}

/// Argmax label; ties resolve to the earliest label in canonical order.
pub fn dominant_label(values: &[f64; 7]) -> Emotion {
    let mut best = 0;
    for i in 1..7 {
        if values[i] > values[best] {
            best = i;
        }
    }
    Emotion::ALL[best]
}

#[cfg(test)]
mod tests {
    use super::*;

    // Figure 1 example frames (angry, disgust, fear, happy, sad, surprise, neutral)
    const TOP: [f64; 7] = [0.78, 0.00, 0.09, 0.00, 0.07, 0.00, 0.04];
    const BOTTOM: [f64; 7] = [0.07, 0.00, 0.04, 0.00, 0.02, 0.08, 0.79];

    #[test]
    fn published_examples() {
        assert!((negative_score(&TOP) - 0.94).abs() < 1e-12);
        assert!((negative_score(&BOTTOM) - 0.13).abs() < 1e-12);
        assert_eq!(dominant_label(&TOP), Emotion::Angry);
        assert_eq!(dominant_label(&BOTTOM), Emotion::Neutral);
    }

    #[test]
    fn pure_neutral_has_no_negative_mass() {
        let s = EmotionScores::new([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.negative(), 0.0);
    }

    #[test]
    fn tie_goes_to_canonical_order() {
        assert_eq!(dominant_label(&[0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0]), Emotion::Angry);
    }

    #[test]
    fn off_simplex_values_are_rejected_or_renormalized() {
        assert!(EmotionScores::new([0.5; 7]).is_err());
        let (s, flagged) = EmotionScores::from_model_output(&[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        assert!(flagged);
        assert!((s.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (_, flagged) =
            EmotionScores::from_model_output(&[0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.4]).unwrap();
        assert!(!flagged);
        assert!(EmotionScores::from_model_output(&[0.5; 6]).is_err());
    }
}
