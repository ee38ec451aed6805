use serde::{Deserialize, Serialize};

use super::dist;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); `None` when n < 2.
    pub sd: Option<f64>,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance. Callers guarantee `values.len() >= 2`.
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: &[f64]) -> f64 {
    let v = sorted(values);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Linear-interpolation quantile (type 7) of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn describe(values: &[f64]) -> Result<DescriptiveStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput("describe() needs at least one value".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("describe() got a non-finite value".into()));
    }
    let s = sorted(values);
    Ok(DescriptiveStats {
        n: values.len(),
        mean: mean(values),
        sd: (values.len() >= 2).then(|| sample_variance(values).sqrt()),
        min: s[0],
        median: median(values),
        max: s[s.len() - 1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

/// Mean with a t-based confidence interval: `mean ± t(n-1) * sd / sqrt(n)`.
pub fn mean_ci(values: &[f64], level: f64) -> Result<MeanCi> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "confidence interval needs n >= 2, got {}",
            values.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let n = values.len() as f64;
    let m = mean(values);
    let se = (sample_variance(values) / n).sqrt();
    let crit = dist::t_quantile(0.5 + 0.5 * level, n - 1.0)?;
    Ok(MeanCi {
        mean: m,
        lo: m - crit * se,
        hi: m + crit * se,
        level,
    })
}
