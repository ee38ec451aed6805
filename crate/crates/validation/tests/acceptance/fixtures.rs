//! Reproduction of published statistics from per-video summary tables.
//!
//! The tables are looked up in `$FACE_AFFECT_FIXTURES` (a directory) or in
//! this crate's `fixtures/` directory, as `summary_uniform300.csv` and
//! `summary_stride50.csv`.

use std::path::PathBuf;
use std::time::Instant;

use face_affect::affect::read_summary_csv;
use face_affect::corpus::BinaryGroup;
use face_affect::stats::{analyze, AnalysisReport, Measure, TTestVariant};

use crate::{Check, Tally};

fn fixture(name: &str) -> PathBuf {
    std::env::var_os("FACE_AFFECT_FIXTURES")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
        .join(name)
}

/// mean, sd, min, median, max per variable, in table order.
type Descriptives = [(&'static str, [f64; 5]); 8];

const TABLE_MAIN: Descriptives = [
    ("angry", [0.227, 0.134, 0.034, 0.200, 0.726]),
    ("disgust", [0.003, 0.008, 0.000, 0.001, 0.066]),
    ("fear", [0.127, 0.091, 0.014, 0.099, 0.548]),
    ("happy", [0.077, 0.083, 0.000, 0.051, 0.414]),
    ("sad", [0.206, 0.110, 0.023, 0.181, 0.568]),
    ("surprise", [0.031, 0.037, 0.000, 0.020, 0.273]),
    ("neutral", [0.328, 0.169, 0.020, 0.300, 0.807]),
    ("negative", [0.563, 0.185, 0.156, 0.570, 0.964]),
];

const TABLE_SUPPLEMENTARY: Descriptives = [
    ("angry", [0.223, 0.130, 0.031, 0.195, 0.728]),
    ("disgust", [0.003, 0.006, 0.000, 0.001, 0.051]),
    ("fear", [0.122, 0.087, 0.015, 0.093, 0.530]),
    ("happy", [0.084, 0.099, 0.001, 0.053, 0.594]),
    ("sad", [0.204, 0.109, 0.021, 0.183, 0.573]),
    ("surprise", [0.030, 0.037, 0.000, 0.018, 0.275]),
    ("neutral", [0.332, 0.167, 0.021, 0.309, 0.812]),
    ("negative", [0.552, 0.182, 0.147, 0.558, 0.965]),
];

/// Seven emotion columns then negative-dominant, per binary group.
const DOMINANCE_MAIN: [(BinaryGroup, [f64; 8]); 2] = [
    (BinaryGroup::Pluralist, [0.162, 0.001, 0.094, 0.072, 0.123, 0.019, 0.428, 0.461]),
    (BinaryGroup::Populist, [0.262, 0.004, 0.084, 0.062, 0.234, 0.010, 0.345, 0.667]),
];

const DOMINANCE_SUPPLEMENTARY: [(BinaryGroup, [f64; 8]); 2] = [
    (BinaryGroup::Pluralist, [0.176, 0.000, 0.096, 0.073, 0.132, 0.020, 0.438, 0.484]),
    (BinaryGroup::Populist, [0.248, 0.000, 0.080, 0.076, 0.225, 0.011, 0.358, 0.640]),
];

/// (measure, one level, other level, |mean difference|, adjusted p)
type TukeyPair = (Measure, &'static str, &'static str, f64, f64);

const TUKEY_MAIN: [TukeyPair; 4] = [
    (Measure::Negative, "strongly populist", "strongly pluralist", 0.1559, 0.0005),
    (Measure::Negative, "strongly populist", "moderately pluralist", 0.1148, 0.0029),
    (Measure::Neutral, "strongly pluralist", "moderately populist", 0.135, 0.0056),
    (Measure::Neutral, "strongly pluralist", "strongly populist", 0.129, 0.0032),
];

const TUKEY_SUPPLEMENTARY: [TukeyPair; 4] = [
    (Measure::Negative, "strongly populist", "strongly pluralist", 0.1298, 0.0057),
    (Measure::Negative, "strongly populist", "moderately pluralist", 0.0961, 0.0166),
    (Measure::Neutral, "strongly pluralist", "moderately populist", 0.138, 0.0037),
    (Measure::Neutral, "strongly pluralist", "strongly populist", 0.1131, 0.0122),
];

fn load(name: &str, rows_expected: usize) -> Result<(AnalysisReport, f64), Vec<String>> {
    let path = fixture(name);
    if !path.exists() {
        return Err(vec![format!(
            "published per-video summary table not available: {} does not exist",
            path.display()
        )]);
    }
    let start = Instant::now();
    let rows = read_summary_csv(&path).map_err(|e| vec![e.to_string()])?;
    if rows.len() != rows_expected {
        return Err(vec![format!("{} has {} rows, expected {rows_expected}", path.display(), rows.len())]);
    }
    let report = analyze(&rows, TTestVariant::Pooled, name).map_err(|e| vec![e.to_string()])?;
    Ok((report, start.elapsed().as_secs_f64()))
}

fn descriptives(t: &mut Tally, r: &AnalysisReport, table: &Descriptives) {
    for (var, want) in table {
        let Some(row) = r.descriptives.iter().find(|d| d.variable == *var) else {
            t.truth(&format!("descriptive row {var} missing"), false);
            continue;
        };
        let s = &row.stats;
        let got = [s.mean, s.sd.unwrap_or(f64::NAN), s.min, s.median, s.max];
        for (k, stat) in ["mean", "sd", "min", "median", "max"].iter().enumerate() {
            t.close(&format!("{var} {stat}"), got[k], want[k], 0.001);
        }
    }
}

fn dominance(t: &mut Tally, r: &AnalysisReport, table: &[(BinaryGroup, [f64; 8]); 2]) {
    for (group, want) in table {
        let Some(row) = r.dominance.iter().find(|d| d.group == *group) else {
            t.truth(&format!("dominance row for {} missing", group.as_str()), false);
            continue;
        };
        for (k, w) in want.iter().enumerate() {
            let got = if k < 7 { row.dominance[k] } else { row.negative_dominant };
            t.close(&format!("dominance {} column {}", group.as_str(), k + 1), got, *w, 0.001);
        }
    }
}

fn tukey(t: &mut Tally, r: &AnalysisReport, pairs: &[TukeyPair]) {
    for (measure, a, b, diff, p) in pairs {
        let found = r
            .four_level
            .iter()
            .find(|f| f.measure == *measure)
            .and_then(|f| {
                f.pairs
                    .iter()
                    .find(|x| (x.group_i == *a && x.group_j == *b) || (x.group_i == *b && x.group_j == *a))
            });
        match found {
            Some(x) => {
                t.close(&format!("Tukey {measure} {a} vs {b} diff"), x.mean_diff.abs(), *diff, 0.0005);
                t.close(&format!("Tukey {measure} {a} vs {b} p"), x.p_adjusted, *p, 0.0005);
            }
            None => t.truth(&format!("Tukey {measure} {a} vs {b} missing"), false),
        }
    }
}

/// (t, F, eta²) results by measure, or a miss when the analysis was skipped.
fn tests(t: &mut Tally, r: &AnalysisReport, m: Measure) -> Option<(f64, f64, f64, f64, f64)> {
    let bin = r.binary.iter().find(|b| b.measure == m);
    let four = r.four_level.iter().find(|f| f.measure == m);
    match (bin, four) {
        (Some(b), Some(f)) => Some((b.test.t, b.test.p, f.anova.f, f.anova.p, f.anova.eta_squared)),
        _ => {
            t.truth(&format!("{m} comparisons missing: {:?}", r.skipped), false);
            None
        }
    }
}

#[allow(clippy::approx_constant)] // tabulated bound, not 1/pi
pub fn main_analysis() -> Check {
    let (r, secs) = load("summary_uniform300.csv", 203)?;
    let mut t = Tally::default();
    descriptives(&mut t, &r, &TABLE_MAIN);
    if let Some((tv, p, f, fp, eta)) = tests(&mut t, &r, Measure::Negative) {
        t.close("negative t", tv, 4.691, 0.005);
        t.within("negative t p", p, 2e-6, 1e-5);
        t.close("negative F", f, 7.109, 0.01);
        t.close("negative F p", fp, 0.000152, 0.00002);
        t.close("negative eta²", eta, 0.104, 0.002);
    }
    if let Some((tv, p, f, fp, eta)) = tests(&mut t, &r, Measure::Neutral) {
        t.close("neutral t", tv, -3.636, 0.005);
        t.close("neutral t p", p, 0.00035, 0.00005);
        t.close("neutral F", f, 5.625, 0.01);
        t.close("neutral F p", fp, 0.001038, 0.0001);
        t.close("neutral eta²", eta, 0.084, 0.002);
    }
    for (m, pop, plu) in [
        (Measure::Negative, (0.616, 0.584, 0.649), (0.500, 0.464, 0.537)),
        (Measure::Neutral, (0.289, 0.260, 0.318), (0.374, 0.338, 0.409)),
    ] {
        if let Some(b) = r.binary.iter().find(|b| b.measure == m) {
            for (who, ci, want) in [("populist", &b.test.ci_a, pop), ("pluralist", &b.test.ci_b, plu)] {
                t.close(&format!("{who} {m} mean"), ci.mean, want.0, 0.001);
                t.close(&format!("{who} {m} CI low"), ci.lo, want.1, 0.001);
                t.close(&format!("{who} {m} CI high"), ci.hi, want.2, 0.001);
            }
        }
    }
    tukey(&mut t, &r, &TUKEY_MAIN);
    dominance(&mut t, &r, &DOMINANCE_MAIN);
    t.finish(format!("analysis in {secs:.3}s"))
}

pub fn supplementary() -> Check {
    let (r, secs) = load("summary_stride50.csv", 209)?;
    let mut t = Tally::default();
    descriptives(&mut t, &r, &TABLE_SUPPLEMENTARY);
    if let Some((tv, _, f, _, eta)) = tests(&mut t, &r, Measure::Negative) {
        t.close("negative t", tv, 3.742, 0.005);
        t.close("negative F", f, 4.886, 0.01);
        t.close("negative eta²", eta, 0.073, 0.002);
    }
    if let Some((tv, _, f, _, eta)) = tests(&mut t, &r, Measure::Neutral) {
        t.close("neutral t", tv, -3.222, 0.005);
        t.close("neutral F", f, 5.180, 0.01);
        t.close("neutral eta²", eta, 0.077, 0.002);
    }
    tukey(&mut t, &r, &TUKEY_SUPPLEMENTARY);
    dominance(&mut t, &r, &DOMINANCE_SUPPLEMENTARY);
    t.finish(format!("analysis in {secs:.3}s"))
}
