use serde::{Deserialize, Serialize};

use super::descriptive::{mean, mean_ci, sample_variance, MeanCi};
use super::dist;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TTestVariant {
    Welch,
    /// Student's equal-variance test.
    #[default]
    Pooled,
}

impl std::str::FromStr for TTestVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "welch" => Ok(TTestVariant::Welch),
            "pooled" | "student" => Ok(TTestVariant::Pooled),
            other => Err(Error::InvalidParameter(format!("unknown t-test variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub variant: TTestVariant,
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub ci_a: MeanCi,
    pub ci_b: MeanCi,
}

/// Two-sample t-test of `mean(a) - mean(b)`.
pub fn two_group_t(a: &[f64], b: &[f64], variant: TTestVariant) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "t-test needs n >= 2 in each group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a), sample_variance(b));
    if va == 0.0 && vb == 0.0 {
        return Err(Error::DegenerateVariance(
            "both groups have zero variance".into(),
        ));
    }
    let (se, df) = match variant {
        TTestVariant::Pooled => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
        TTestVariant::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
            ((qa + qb).sqrt(), df)
        }
    };
    let t = (ma - mb) / se;
    let p = dist::t_two_sided_p(t, df)?;
    Ok(TTestResult {
        variant,
        t,
        df,
        p,
        mean_a: ma,
        mean_b: mb,
        ci_a: mean_ci(a, 0.95)?,
        ci_b: mean_ci(b, 0.95)?,
    })
}
