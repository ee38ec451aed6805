use crate::error::{Error, Result};
use crate::stats::descriptive::{quantile_sorted, sample_variance};
use crate::stats::dist::normal_cdf;

pub const GRID_POINTS: usize = 256;
pub const MIN_BANDWIDTH: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub bandwidth: f64,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Silverman's rule of thumb, floored at [`MIN_BANDWIDTH`].
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let sd = sample_variance(values).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    (0.9 * spread * n.powf(-0.2)).max(MIN_BANDWIDTH)
}

/// Gaussian kernel density on [0,1], renormalized so the truncated density
/// integrates to one.
pub fn kde(values: &[f64], bandwidth: Option<f64>) -> Result<Density> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "density needs at least 2 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite value in density input".into()));
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::InvalidParameter(format!("bandwidth {h} must be positive"))),
        None => silverman_bandwidth(values),
    };
    let n = values.len() as f64;
    let mass = values
        .iter()
        .map(|v| normal_cdf((1.0 - v) / h) - normal_cdf(-v / h))
        .sum::<f64>()
        / n;
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt() * mass.max(f64::MIN_POSITIVE));
    let xs: Vec<f64> = (0..GRID_POINTS).map(|i| i as f64 / (GRID_POINTS - 1) as f64).collect();
    let ys = xs
        .iter()
        .map(|x| {
            values
                .iter()
                .map(|v| (-0.5 * ((x - v) / h).powi(2)).exp())
                .sum::<f64>()
                * norm
        })
        .collect();
    Ok(Density { bandwidth: h, xs, ys })
}

impl Density {
    pub fn integral(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
            .sum()
    }

    pub fn peak(&self) -> f64 {
        self.ys.iter().copied().fold(0.0, f64::max)
    }
}
