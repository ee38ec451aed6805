//! Full group-comparison analysis over a summary table, with text and JSON
//! renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::anova::{anova_oneway, tukey_hsd, AnovaResult, PairwiseResult};
use super::descriptive::{describe, DescriptiveStats};
use super::tables::{country_summary, dominance_table, CountryGroup, DominanceRow, Measure};
use super::ttest::{two_group_t, TTestResult, TTestVariant};
use crate::affect::{Emotion, SummaryRow};
use crate::corpus::{BinaryGroup, PopulismCategory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveRow {
    pub variable: String,
    #[serde(flatten)]
    pub stats: DescriptiveStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryComparison {
    pub measure: Measure,
    /// Populist minus pluralist.
    pub test: TTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourLevelComparison {
    pub measure: Measure,
    pub anova: AnovaResult,
    pub pairs: Vec<PairwiseResult>,
}

/// Flat test record for machine consumers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub test: String,
    pub groups: Vec<String>,
    pub statistic: f64,
    pub df: Vec<f64>,
    pub p: f64,
    pub effect_size: Option<f64>,
    pub pairs: Vec<PairwiseResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub label: String,
    pub videos: usize,
    pub group_sizes: Vec<(String, usize)>,
    pub descriptives: Vec<DescriptiveRow>,
    pub binary: Vec<BinaryComparison>,
    pub four_level: Vec<FourLevelComparison>,
    pub dominance: Vec<DominanceRow>,
    pub countries: Vec<(Measure, Vec<CountryGroup>)>,
    pub tests: Vec<TestRecord>,
    /// Analyses that could not run on this data, with the reason.
    pub skipped: Vec<String>,
}

pub fn descriptive_table(rows: &[SummaryRow]) -> Result<Vec<DescriptiveRow>> {
    let mut out = Vec::with_capacity(8);
    for e in Emotion::ALL {
        let values: Vec<f64> = rows.iter().map(|r| r.summary.mean(e)).collect();
        out.push(DescriptiveRow {
            variable: e.as_str().to_string(),
            stats: describe(&values)?,
        });
    }
    let neg: Vec<f64> = rows.iter().map(|r| r.summary.mean_negative).collect();
    out.push(DescriptiveRow {
        variable: "negative".into(),
        stats: describe(&neg)?,
    });
    Ok(out)
}

pub fn binary_values(rows: &[SummaryRow], measure: Measure, group: BinaryGroup) -> Vec<f64> {
    rows.iter()
        .filter(|r| r.binary_group() == group)
        .map(|r| measure.value(r))
        .collect()
}

pub fn category_values(rows: &[SummaryRow], measure: Measure) -> Vec<Vec<f64>> {
    PopulismCategory::ALL
        .iter()
        .map(|c| {
            rows.iter()
                .filter(|r| r.populism_category == *c)
                .map(|r| measure.value(r))
                .collect()
        })
        .collect()
}

pub fn analyze(rows: &[SummaryRow], variant: TTestVariant, label: &str) -> Result<AnalysisReport> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("summary table has no videos".into()));
    }
    let mut skipped = Vec::new();
    let mut tests = Vec::new();

    let mut group_sizes: Vec<(String, usize)> = BinaryGroup::ALL
        .iter()
        .map(|g| (g.as_str().to_string(), rows.iter().filter(|r| r.binary_group() == *g).count()))
        .collect();
    group_sizes.extend(PopulismCategory::ALL.iter().map(|c| {
        (
            c.label().to_string(),
            rows.iter().filter(|r| r.populism_category == *c).count(),
        )
    }));

    let mut binary = Vec::new();
    let mut four_level = Vec::new();
    let labels: Vec<&str> = PopulismCategory::ALL.iter().map(|c| c.label()).collect();
    for measure in Measure::ALL {
        let populist = binary_values(rows, measure, BinaryGroup::Populist);
        let pluralist = binary_values(rows, measure, BinaryGroup::Pluralist);
        match two_group_t(&populist, &pluralist, variant) {
            Ok(test) => {
                tests.push(TestRecord {
                    test: format!("t_{measure}"),
                    groups: vec!["populist".into(), "pluralist".into()],
                    statistic: test.t,
                    df: vec![test.df],
                    p: test.p,
                    effect_size: None,
                    pairs: Vec::new(),
                });
                binary.push(BinaryComparison { measure, test });
            }
            Err(e) => skipped.push(format!("t-test on {measure}: {e}")),
        }

        let groups = category_values(rows, measure);
        match anova_oneway(&groups).and_then(|a| Ok((a, tukey_hsd(&groups, &labels)?))) {
            Ok((anova, pairs)) => {
                tests.push(TestRecord {
                    test: format!("anova_{measure}"),
                    groups: labels.iter().map(|s| s.to_string()).collect(),
                    statistic: anova.f,
                    df: vec![anova.df_between as f64, anova.df_within as f64],
                    p: anova.p,
                    effect_size: Some(anova.eta_squared),
                    pairs: pairs.clone(),
                });
                four_level.push(FourLevelComparison { measure, anova, pairs });
            }
            Err(e) => skipped.push(format!("ANOVA on {measure}: {e}")),
        }
    }

    let dominance = match dominance_table(rows) {
        Ok(t) => t,
        Err(e) => {
            skipped.push(format!("dominance table: {e}"));
            Vec::new()
        }
    };

    Ok(AnalysisReport {
        label: label.to_string(),
        videos: rows.len(),
        group_sizes,
        descriptives: descriptive_table(rows)?,
        binary,
        four_level,
        dominance,
        countries: Measure::ALL
            .iter()
            .map(|m| (*m, country_summary(rows, *m)))
            .collect(),
        tests,
        skipped,
    })
}

/// Six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    format!("{rounded}")
}

impl AnalysisReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} ({} videos)", self.label, self.videos);
        for (g, n) in &self.group_sizes {
            let _ = writeln!(s, "  {g}: {n}");
        }
        let _ = writeln!(s, "\n## Descriptives");
        let _ = writeln!(s, "{:<10} {:>7} {:>7} {:>7} {:>7} {:>7}", "", "mean", "sd", "min", "median", "max");
        for r in &self.descriptives {
            let sd = r.stats.sd.map(|v| format!("{v:.3}")).unwrap_or_else(|| "NA".into());
            let _ = writeln!(
                s,
                "{:<10} {:>7.3} {:>7} {:>7.3} {:>7.3} {:>7.3}",
                r.variable, r.stats.mean, sd, r.stats.min, r.stats.median, r.stats.max
            );
        }
        let _ = writeln!(s, "\n## Populist vs pluralist");
        for b in &self.binary {
            let t = &b.test;
            let _ = writeln!(
                s,
                "{}: populist {:.3} (95% CI {:.3}-{:.3}), pluralist {:.3} (95% CI {:.3}-{:.3}); t = {:.3}, df = {:.2}, p = {}",
                b.measure,
                t.mean_a,
                t.ci_a.lo,
                t.ci_a.hi,
                t.mean_b,
                t.ci_b.lo,
                t.ci_b.hi,
                t.t,
                t.df,
                sig6(t.p)
            );
        }
        let _ = writeln!(s, "\n## Four populism levels");
        for c in &self.four_level {
            let a = &c.anova;
            let _ = writeln!(
                s,
                "{}: F({}, {}) = {:.3}, p = {}, eta2 = {:.3}",
                c.measure,
                a.df_between,
                a.df_within,
                a.f,
                sig6(a.p),
                a.eta_squared
            );
            for p in &c.pairs {
                let _ = writeln!(
                    s,
                    "  {} vs {}: diff {:.4}, p = {}",
                    p.group_i,
                    p.group_j,
                    p.mean_diff,
                    sig6(p.p_adjusted)
                );
            }
        }
        if !self.dominance.is_empty() {
            let _ = writeln!(s, "\n## Dominant emotion per frame");
            let mut header = format!("{:<10}", "");
            for e in Emotion::ALL {
                let _ = write!(header, " {:>8}", e.as_str());
            }
            let _ = writeln!(s, "{header} {:>8}", "negative");
            for r in &self.dominance {
                let _ = write!(s, "{:<10}", r.group.as_str());
                for v in r.dominance {
                    let _ = write!(s, " {v:>8.3}");
                }
                let _ = writeln!(s, " {:>8.3}", r.negative_dominant);
            }
        }
        for (measure, groups) in &self.countries {
            let _ = writeln!(s, "\n## Countries ({measure})");
            for g in groups {
                let _ = writeln!(s, "{} {:<10} n={:<3} mean {:.3}", g.country_iso, g.group.as_str(), g.values.len(), g.mean);
            }
        }
        if !self.skipped.is_empty() {
            let _ = writeln!(s, "\n## Skipped");
            for k in &self.skipped {
                let _ = writeln!(s, "- {k}");
            }
        }
        s
    }
}
