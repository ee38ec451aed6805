//! Deterministic SVG figures: group scatter, raincloud and country panels.

mod kde;
mod svg;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::affect::SummaryRow;
use crate::corpus::{BinaryGroup, PopulismCategory};
use crate::error::{Error, Result};
use crate::stats::descriptive::quantile_sorted;
use crate::stats::{country_summary, CountryGroup, Measure};

pub use kde::{kde, silverman_bandwidth, Density, GRID_POINTS, MIN_BANDWIDTH};
use svg::Svg;

const GROUP_COLORS: [&str; 2] = ["#1f77b4", "#d62728"];
const LEVEL_COLORS: [&str; 4] = ["#2c7bb6", "#abd9e9", "#fdae61", "#d7191c"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Binary,
    FourLevel,
    Country,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub measure: Measure,
    pub grouping: Grouping,
    pub width: u32,
    pub height: u32,
    pub reference_line: Option<f64>,
}

impl FigureSpec {
    pub fn new(measure: Measure, grouping: Grouping) -> FigureSpec {
        FigureSpec {
            measure,
            grouping,
            width: 720,
            height: 540,
            reference_line: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.width < 200 || self.height < 150 {
            return Err(Error::InvalidParameter(format!(
                "figure size {}x{} too small",
                self.width, self.height
            )));
        }
        match self.reference_line {
            Some(r) if !(0.0..=1.0).contains(&r) => Err(Error::InvalidParameter(format!(
                "reference line {r} outside [0,1]"
            ))),
            _ => Ok(()),
        }
    }
}

/// A labeled group of values drawn as one lane.
#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub label: String,
    pub color: String,
    pub values: Vec<f64>,
}

pub fn figure_file_name(family: &str, measure: &str, strategy: &str) -> String {
    format!("fig_{family}_{measure}_{strategy}.svg")
}

fn metadata(family: &str, spec: &FigureSpec, seed: u64) -> String {
    serde_json::json!({
        "family": family,
        "measure": spec.measure.as_str(),
        "grouping": spec.grouping,
        "seed": seed,
    })
    .to_string()
}

struct Frame {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn of(spec: &FigureSpec, left: f64) -> Frame {
        Frame {
            left,
            right: spec.width as f64 - 20.0,
            top: 40.0,
            bottom: spec.height as f64 - 40.0,
        }
    }

    fn sx(&self, v: f64) -> f64 {
        self.left + v.clamp(0.0, 1.0) * (self.right - self.left)
    }

    fn sy(&self, v: f64) -> f64 {
        self.bottom - v.clamp(0.0, 1.0) * (self.bottom - self.top)
    }
}

const TICKS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

fn title(doc: &mut Svg, spec: &FigureSpec, text: &str) {
    doc.text(spec.width as f64 / 2.0, 24.0, "middle", r#"font-size="14""#, text);
}

struct BoxGlyph {
    q1: f64,
    median: f64,
    q3: f64,
    lo: f64,
    hi: f64,
}

fn box_glyph(values: &[f64]) -> BoxGlyph {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&s, 0.25);
    let q3 = quantile_sorted(&s, 0.75);
    let fence = 1.5 * (q3 - q1);
    let lo = s.iter().copied().find(|v| *v >= q1 - fence).unwrap_or(q1);
    let hi = s.iter().rev().copied().find(|v| *v <= q3 + fence).unwrap_or(q3);
    BoxGlyph {
        q1,
        median: quantile_sorted(&s, 0.5),
        q3,
        lo,
        hi,
    }
}

/// Horizontal raincloud: per lane a density cloud, a box glyph and a
/// jittered dot strip. Score runs along x.
pub fn raincloud(lanes: &[Lane], spec: &FigureSpec, seed: u64) -> Result<String> {
    spec.validate()?;
    if lanes.is_empty() {
        return Err(Error::EmptyInput("raincloud needs at least one group".into()));
    }
    let densities = lanes
        .iter()
        .map(|l| {
            kde(&l.values, None).map_err(|_| {
                Error::InsufficientData(format!(
                    "group `{}` has {} value(s); at least 2 required",
                    l.label,
                    l.values.len()
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let f = Frame::of(spec, 170.0);
    let mut doc = Svg::new(spec.width, spec.height, &metadata("raincloud", spec, seed));
    title(&mut doc, spec, &format!("Mean {} score", spec.measure.as_str()));
    let lane_h = (f.bottom - f.top) / lanes.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in TICKS {
        let x = f.sx(t);
        doc.line(x, f.bottom, x, f.bottom + 5.0, r#"stroke="black""#);
        doc.text(x, f.bottom + 18.0, "middle", r#"class="tick-x""#, &format!("{t:.1}"));
    }
    doc.line(f.left, f.bottom, f.right, f.bottom, r#"stroke="black""#);
    for (i, (lane, density)) in lanes.iter().zip(&densities).enumerate() {
        let top = f.top + i as f64 * lane_h;
        let base = top + 0.5 * lane_h;
        let color = &lane.color;
        doc.text(f.left - 10.0, base, "end", r#"class="lane-label""#, &lane.label);
        let scale = 0.45 * lane_h / density.peak().max(f64::MIN_POSITIVE);
        let mut cloud = vec![(f.sx(0.0), base)];
        cloud.extend(density.xs.iter().zip(&density.ys).map(|(x, y)| (f.sx(*x), base - y * scale)));
        cloud.push((f.sx(1.0), base));
        doc.polygon(&cloud, &format!(r#"class="density" fill="{color}" fill-opacity="0.5" stroke="{color}""#));
        let b = box_glyph(&lane.values);
        let (by, bh) = (base + 0.06 * lane_h, 0.1 * lane_h);
        doc.line(f.sx(b.lo), by + bh / 2.0, f.sx(b.q1), by + bh / 2.0, r#"class="whisker" stroke="black""#);
        doc.line(f.sx(b.q3), by + bh / 2.0, f.sx(b.hi), by + bh / 2.0, r#"class="whisker" stroke="black""#);
        doc.rect(
            f.sx(b.q1),
            by,
            f.sx(b.q3) - f.sx(b.q1),
            bh,
            r#"class="box" fill="white" stroke="black""#,
        );
        doc.line(f.sx(b.median), by, f.sx(b.median), by + bh, r#"class="median" stroke="black" stroke-width="2""#);
        for v in &lane.values {
            let jitter: f64 = rng.random();
            let y = base + (0.22 + 0.22 * jitter) * lane_h;
            doc.circle(f.sx(*v), y, 3.0, &format!(r#"class="pt" fill="{color}""#));
        }
    }
    if let Some(r) = spec.reference_line {
        let x = f.sx(r);
        doc.line(x, f.top, x, f.bottom, r#"class="ref" stroke="gray" stroke-dasharray="6 4""#);
    }
    Ok(doc.finish())
}

fn binary_lanes(rows: &[SummaryRow], measure: Measure) -> Vec<Lane> {
    BinaryGroup::ALL
        .iter()
        .zip(GROUP_COLORS)
        .map(|(g, color)| Lane {
            label: g.as_str().to_string(),
            color: color.to_string(),
            values: rows
                .iter()
                .filter(|r| r.binary_group() == *g)
                .map(|r| measure.value(r))
                .collect(),
        })
        .collect()
}

pub fn four_level_lanes(rows: &[SummaryRow], measure: Measure) -> Vec<Lane> {
    PopulismCategory::ALL
        .iter()
        .zip(LEVEL_COLORS)
        .map(|(c, color)| Lane {
            label: c.label().to_string(),
            color: color.to_string(),
            values: rows
                .iter()
                .filter(|r| r.populism_category == *c)
                .map(|r| measure.value(r))
                .collect(),
        })
        .collect()
}

/// Two panels (negative, neutral); one point per video, binary groups side by side.
pub fn group_scatter(rows: &[SummaryRow], spec: &FigureSpec, seed: u64) -> Result<String> {
    spec.validate()?;
    if rows.is_empty() {
        return Err(Error::EmptyInput("scatter needs at least one video".into()));
    }
    let mut doc = Svg::new(spec.width, spec.height, &metadata("scatter", spec, seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let panel_w = (spec.width as f64 - 60.0) / 2.0;
    for (p, measure) in Measure::ALL.iter().enumerate() {
        let left = 50.0 + p as f64 * (panel_w + 10.0);
        let f = Frame {
            left,
            right: left + panel_w - 10.0,
            top: 40.0,
            bottom: spec.height as f64 - 40.0,
        };
        doc.raw(&format!(r#"<g class="panel" data-measure="{}">"#, measure.as_str()));
        doc.text((f.left + f.right) / 2.0, 24.0, "middle", r#"font-size="14""#, measure.as_str());
        doc.line(f.left, f.top, f.left, f.bottom, r#"stroke="black""#);
        for t in TICKS {
            let y = f.sy(t);
            doc.line(f.left - 4.0, y, f.left, y, r#"stroke="black""#);
            doc.text(f.left - 6.0, y + 4.0, "end", r#"class="tick-y""#, &format!("{t:.1}"));
        }
        let lanes = binary_lanes(rows, *measure);
        let lane_w = (f.right - f.left) / lanes.len() as f64;
        for (i, lane) in lanes.iter().enumerate() {
            let cx = f.left + (i as f64 + 0.5) * lane_w;
            doc.text(cx, f.bottom + 18.0, "middle", r#"class="tick-x""#, &lane.label);
            for v in &lane.values {
                let jitter: f64 = rng.random();
                let x = cx + (jitter - 0.5) * 0.6 * lane_w;
                doc.circle(x, f.sy(*v), 3.0, &format!(r#"class="pt" fill="{}" fill-opacity="0.7""#, lane.color));
            }
        }
        doc.raw("</g>");
    }
    Ok(doc.finish())
}

/// One lane per country code; translucent raw values and opaque group means.
pub fn country_panels(groups: &[CountryGroup], spec: &FigureSpec, seed: u64) -> Result<String> {
    spec.validate()?;
    if groups.is_empty() {
        return Err(Error::EmptyInput("country panel needs at least one group".into()));
    }
    let countries: Vec<&str> = groups
        .iter()
        .map(|g| g.country_iso.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut doc = Svg::new(spec.width, spec.height, &metadata("country", spec, seed));
    title(&mut doc, spec, &format!("Mean {} score by country", spec.measure.as_str()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = Frame::of(spec, 50.0);
    doc.line(f.left, f.top, f.left, f.bottom, r#"stroke="black""#);
    doc.line(f.left, f.bottom, f.right, f.bottom, r#"stroke="black""#);
    for t in TICKS {
        let y = f.sy(t);
        doc.text(f.left - 6.0, y + 4.0, "end", r#"class="tick-y""#, &format!("{t:.1}"));
    }
    if let Some(r) = spec.reference_line {
        let y = f.sy(r);
        doc.line(f.left, y, f.right, y, r#"class="ref" stroke="gray" stroke-dasharray="6 4""#);
    }
    let lane_w = (f.right - f.left) / countries.len() as f64;
    for (i, iso) in countries.iter().enumerate() {
        let cx = f.left + (i as f64 + 0.5) * lane_w;
        doc.text(cx, f.bottom + 18.0, "middle", r#"class="tick-x""#, iso);
    }
    for g in groups {
        let i = countries.binary_search(&g.country_iso.as_str()).expect("known country");
        let (offset, color) = match g.group {
            BinaryGroup::Pluralist => (-0.2, GROUP_COLORS[0]),
            BinaryGroup::Populist => (0.2, GROUP_COLORS[1]),
        };
        let cx = f.left + (i as f64 + 0.5 + offset) * lane_w;
        for v in &g.values {
            let jitter: f64 = rng.random();
            let x = cx + (jitter - 0.5) * 0.15 * lane_w;
            doc.circle(x, f.sy(*v), 2.5, &format!(r#"class="pt" fill="{color}" fill-opacity="0.35""#));
        }
        doc.circle(
            cx,
            f.sy(g.mean),
            5.0,
            &format!(
                r#"class="mean" data-country="{}" data-group="{}" data-mean="{}" fill="{color}""#,
                g.country_iso,
                g.group.as_str(),
                g.mean
            ),
        );
    }
    Ok(doc.finish())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FigureOutcome {
    pub written: Vec<PathBuf>,
    pub skipped: Vec<String>,
}

/// Renders every figure family for one sampling strategy into `out_dir`.
/// Figures whose input is too thin are listed in `skipped`.
pub fn render_figures(rows: &[SummaryRow], strategy: &str, out_dir: &Path, seed: u64) -> Result<FigureOutcome> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("no summaries to plot".into()));
    }
    let mut outcome = FigureOutcome::default();
    let mut emit = |name: String, doc: Result<String>| -> Result<()> {
        match doc {
            Ok(svg) => {
                let path = out_dir.join(&name);
                crate::io::write_atomic(&path, svg.as_bytes())?;
                outcome.written.push(path);
            }
            Err(e) => outcome.skipped.push(format!("{name}: {e}")),
        }
        Ok(())
    };
    let spec = FigureSpec::new(Measure::Negative, Grouping::Binary);
    emit(figure_file_name("scatter", "combined", strategy), group_scatter(rows, &spec, seed))?;
    for measure in Measure::ALL {
        let spec = FigureSpec {
            reference_line: Some(0.5),
            ..FigureSpec::new(measure, Grouping::FourLevel)
        };
        let lanes = four_level_lanes(rows, measure);
        emit(
            figure_file_name("raincloud", measure.as_str(), strategy),
            raincloud(&lanes, &spec, seed),
        )?;
        let spec = FigureSpec {
            width: 960,
            reference_line: Some(0.5),
            ..FigureSpec::new(measure, Grouping::Country)
        };
        emit(
            figure_file_name("country", measure.as_str(), strategy),
            country_panels(&country_summary(rows, measure), &spec, seed),
        )?;
    }
    Ok(outcome)
}
