use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::affect::{Emotion, SummaryRow};
use crate::corpus::BinaryGroup;
use crate::error::{Error, Result};

/// Per-video outcome measure used by the group comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Negative,
    Neutral,
}

impl Measure {
    pub const ALL: [Measure; 2] = [Measure::Negative, Measure::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Negative => "negative",
            Measure::Neutral => "neutral",
        }
    }

    pub fn value(self, row: &SummaryRow) -> f64 {
        match self {
            Measure::Negative => row.summary.mean_negative,
            Measure::Neutral => row.summary.mean(Emotion::Neutral),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "negative" => Ok(Measure::Negative),
            "neutral" => Ok(Measure::Neutral),
            other => Err(Error::InvalidParameter(format!("unknown measure `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub group: BinaryGroup,
    pub videos: usize,
    /// Mean per-video dominance fraction, canonical emotion order.
    pub dominance: [f64; 7],
    pub negative_dominant: f64,
}

/// Mean over videos of each dominance fraction, per binary group.
pub fn dominance_table(rows: &[SummaryRow]) -> Result<Vec<DominanceRow>> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("dominance table needs summaries".into()));
    }
    BinaryGroup::ALL
        .iter()
        .map(|&group| {
            let members: Vec<&SummaryRow> = rows.iter().filter(|r| r.binary_group() == group).collect();
            if members.is_empty() {
                return Err(Error::EmptyInput(format!("no {group} videos for the dominance table")));
            }
            let n = members.len() as f64;
            let mut dominance = [0.0; 7];
            let mut negative = 0.0;
            for r in &members {
                for (d, v) in dominance.iter_mut().zip(r.summary.dominance) {
                    *d += v;
                }
                negative += r.summary.negative_dominant_fraction;
            }
            Ok(DominanceRow {
                group,
                videos: members.len(),
                dominance: dominance.map(|d| d / n),
                negative_dominant: negative / n,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryGroup {
    pub country_iso: String,
    pub group: BinaryGroup,
    pub mean: f64,
    pub values: Vec<f64>,
}

/// Per (country, binary group) means plus raw values, ordered by country code
/// then group. Empty groups do not appear.
pub fn country_summary(rows: &[SummaryRow], measure: Measure) -> Vec<CountryGroup> {
    let mut buckets: BTreeMap<(String, BinaryGroup), Vec<f64>> = BTreeMap::new();
    for r in rows {
        buckets
            .entry((r.country_iso.clone(), r.binary_group()))
            .or_default()
            .push(measure.value(r));
    }
    buckets
        .into_iter()
        .map(|((country_iso, group), values)| CountryGroup {
            country_iso,
            group,
            mean: super::descriptive::mean(&values),
            values,
        })
        .collect()
}
