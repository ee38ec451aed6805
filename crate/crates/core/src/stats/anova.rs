use serde::{Deserialize, Serialize};

use super::descriptive::mean;
use super::dist;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p: f64,
    pub eta_squared: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    pub ms_within: f64,
    pub group_means: Vec<f64>,
    pub group_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub group_i: String,
    pub group_j: String,
    /// `mean(group_j) - mean(group_i)`.
    pub mean_diff: f64,
    pub q: f64,
    pub p_adjusted: f64,
}

impl PairwiseResult {
    pub fn reversed(&self) -> PairwiseResult {
        PairwiseResult {
            group_i: self.group_j.clone(),
            group_j: self.group_i.clone(),
            mean_diff: -self.mean_diff,
            q: self.q,
            p_adjusted: self.p_adjusted,
        }
    }
}

fn validate<G: AsRef<[f64]>>(groups: &[G]) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "ANOVA needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    for (i, g) in groups.iter().enumerate() {
        if g.as_ref().len() < 2 {
            return Err(Error::InsufficientData(format!(
                "group {i} has {} observations; ANOVA needs n >= 2 per group",
                g.as_ref().len()
            )));
        }
    }
    Ok(())
}

pub fn anova_oneway<G: AsRef<[f64]>>(groups: &[G]) -> Result<AnovaResult> {
    validate(groups)?;
    let sizes: Vec<usize> = groups.iter().map(|g| g.as_ref().len()).collect();
    let means: Vec<f64> = groups.iter().map(|g| mean(g.as_ref())).collect();
    let total: usize = sizes.iter().sum();

    // pairwise form: exactly zero when all group means coincide
    let mut ss_between = 0.0;
    for i in 0..means.len() {
        for j in (i + 1)..means.len() {
            ss_between += (sizes[i] * sizes[j]) as f64 * (means[i] - means[j]).powi(2);
        }
    }
    ss_between /= total as f64;
    let ss_within: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.as_ref().iter().map(|v| (v - m).powi(2)).sum::<f64>())
        .sum();
    let df_between = groups.len() - 1;
    let df_within = total - groups.len();
    let ms_between = ss_between / df_between as f64;
    let ms_within = ss_within / df_within as f64;
    let ss_total = ss_between + ss_within;

    let (f, p) = if ss_between == 0.0 {
        (0.0, 1.0)
    } else if ss_within == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = ms_between / ms_within;
        (f, dist::f_sf(f, df_between as f64, df_within as f64)?)
    };
    let eta_squared = if ss_total > 0.0 { ss_between / ss_total } else { 0.0 };

    Ok(AnovaResult {
        f,
        df_between,
        df_within,
        p,
        eta_squared,
        ss_between,
        ss_within,
        ms_within,
        group_means: means,
        group_sizes: sizes,
    })
}

/// Tukey-Kramer pairwise comparisons for every `i < j`.
pub fn tukey_hsd<G: AsRef<[f64]>>(groups: &[G], labels: &[&str]) -> Result<Vec<PairwiseResult>> {
    if labels.len() != groups.len() {
        return Err(Error::InvalidParameter(format!(
            "{} labels for {} groups",
            labels.len(),
            groups.len()
        )));
    }
    let anova = anova_oneway(groups)?;
    let k = groups.len();
    let df = anova.df_within as f64;
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            let diff = anova.group_means[j] - anova.group_means[i];
            let se = (0.5
                * anova.ms_within
                * (1.0 / anova.group_sizes[i] as f64 + 1.0 / anova.group_sizes[j] as f64))
                .sqrt();
            let (q, p) = if diff == 0.0 {
                (0.0, 1.0)
            } else if se == 0.0 {
                (f64::INFINITY, 0.0)
            } else {
                let q = diff.abs() / se;
                (q, dist::studentized_range_sf(q, k, df)?)
            };
            out.push(PairwiseResult {
                group_i: labels[i].to_string(),
                group_j: labels[j].to_string(),
                mean_diff: diff,
                q,
                p_adjusted: p,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_groups() {
        let g = [0.1, 0.4, 0.3, 0.9];
        let r = anova_oneway(&[&g[..], &g[..]]).unwrap();
        assert_eq!(r.f, 0.0);
        assert_eq!(r.eta_squared, 0.0);
        assert_eq!(r.p, 1.0);
        let pairs = tukey_hsd(&[&g[..], &g[..]], &["a", "b"]).unwrap();
        assert_eq!(pairs[0].mean_diff, 0.0);
        assert!((pairs[0].p_adjusted - 1.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_example() {
        // three groups with hand-computed sums of squares:
        // means 2, 4, 6; grand 4; SSB = 3*(4+0+4) = 24; SSW = 2+2+2 = 6
        let groups = [vec![1.0, 2.0, 3.0], vec![3.0, 4.0, 5.0], vec![5.0, 6.0, 7.0]];
        let r = anova_oneway(&groups).unwrap();
        assert!((r.ss_between - 24.0).abs() < 1e-12);
        assert!((r.ss_within - 6.0).abs() < 1e-12);
        assert!((r.f - 12.0).abs() < 1e-12);
        assert_eq!((r.df_between, r.df_within), (2, 6));
        assert!((r.eta_squared - 0.8).abs() < 1e-12);
    }

    #[test]
    fn group_with_one_value_is_rejected() {
        assert!(anova_oneway(&[vec![1.0], vec![2.0, 3.0]]).is_err());
        assert!(anova_oneway(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn pairs_are_ordered_and_antisymmetric() {
        let groups = [vec![1.0, 2.0, 3.0], vec![3.0, 4.0, 5.0], vec![5.0, 6.0, 7.0]];
        let pairs = tukey_hsd(&groups, &["a", "b", "c"]).unwrap();
        assert_eq!(pairs.len(), 3);
        assert_eq!((pairs[0].group_i.as_str(), pairs[0].group_j.as_str()), ("a", "b"));
        assert!((pairs[1].mean_diff - 4.0).abs() < 1e-12);
        let rev = pairs[1].reversed();
        assert_eq!(rev.mean_diff, -pairs[1].mean_diff);
        assert_eq!(rev.p_adjusted, pairs[1].p_adjusted);
    }
}
