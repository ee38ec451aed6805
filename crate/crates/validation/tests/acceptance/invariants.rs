//! Property checks over randomly generated inputs.

use face_affect::affect::{dominant_label, negative_score, Emotion, EmotionScores, SummaryRow, VideoSummary};
use face_affect::corpus::PopulismCategory;
use face_affect::detector::{nms, ScoredBox};
use face_affect::sampler::{stride_indices, uniform_indices};
use face_affect::stats::{anova_oneway, two_group_t, Measure, TTestVariant};
use face_affect::viz::{raincloud, render_figures, FigureSpec, Grouping, Lane};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use crate::Check;

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: 256,
        failure_persistence: None,
        ..Config::default()
    })
}

fn composition() -> impl Strategy<Value = [f64; 7]> {
    prop::array::uniform7(0.0f64..1.0).prop_filter("non-zero mass", |v| v.iter().sum::<f64>() > 1e-6)
}

fn sample(min: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(0.0f64..1.0, min..40).prop_filter("some spread", |v| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() > 1e-6
    })
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

type Property = (&'static str, fn(&mut TestRunner) -> Result<(), String>);

fn simplex_closure(r: &mut TestRunner) -> Result<(), String> {
    r.run(&composition(), |raw| {
        let f32s: Vec<f32> = raw.iter().map(|v| *v as f32).collect();
        let (s, _) = EmotionScores::from_model_output(&f32s).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let sum: f64 = s.values().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");
        prop_assert!(s.values().iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(EmotionScores::new(*s.values()).is_ok());
        Ok(())
    })
    .map_err(|e| e.to_string())
}

fn negative_additivity(r: &mut TestRunner) -> Result<(), String> {
    r.run(&(composition(), composition()), |(a, b)| {
        let direct = a[0] + a[1] + a[2] + a[4];
        prop_assert!((negative_score(&a) - direct).abs() < 1e-12);
        let sum: [f64; 7] = std::array::from_fn(|i| a[i] + b[i]);
        prop_assert!((negative_score(&sum) - negative_score(&a) - negative_score(&b)).abs() < 1e-12);
        Ok(())
    })
    .map_err(|e| e.to_string())
}

fn argmax_rules(r: &mut TestRunner) -> Result<(), String> {
    r.run(&(composition(), 1e-3f64..1e3, 0usize..7, 0usize..7), |(v, c, i, j)| {
        let scaled = v.map(|x| x * c);
        prop_assert_eq!(dominant_label(&scaled), dominant_label(&v));
        let best = dominant_label(&v).index();
        prop_assert!(v.iter().all(|x| *x <= v[best]));
        // a tie goes to the earlier label
        let mut tied = [0.01; 7];
        tied[i] = 0.5;
        tied[j] = 0.5;
        prop_assert_eq!(dominant_label(&tied), Emotion::ALL[i.min(j)]);
        Ok(())
    })
    .map_err(|e| e.to_string())
}

fn sampler_indices(r: &mut TestRunner) -> Result<(), String> {
    r.run(&(0u64..20_000, 1u64..400, 1u64..120), |(total, n, k)| {
        let u = uniform_indices(total, n);
        prop_assert_eq!(u.len() as u64, total.min(n));
        prop_assert!(u.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(u.iter().all(|i| *i < total));
        if total > 0 {
            prop_assert_eq!(u[0], 0);
        }
        let s = stride_indices(total, k);
        prop_assert_eq!(s.len() as u64, total.div_ceil(k));
        prop_assert!(s.iter().enumerate().all(|(m, i)| *i == m as u64 * k));
        Ok(())
    })
    .map_err(|e| e.to_string())
}

fn nms_idempotent(r: &mut TestRunner) -> Result<(), String> {
    let boxes = vec((0.0f64..200.0, 0.0f64..200.0, 5.0f64..80.0, 5.0f64..80.0, 0.0f64..1.0), 0..40);
    r.run(&(boxes, 0.1f64..0.9), |(raw, thr)| {
        let b: Vec<ScoredBox> = raw
            .into_iter()
            .map(|(x, y, w, h, score)| ScoredBox { x, y, w, h, score })
            .collect();
        let once = nms(&b, thr);
        prop_assert_eq!(nms(&once, thr), once.clone());
        for (i, a) in once.iter().enumerate() {
            for c in &once[i + 1..] {
                prop_assert!(a.iou(c) < thr);
            }
        }
        Ok(())
    })
    .map_err(|e| e.to_string())
}

fn f_is_t_squared(r: &mut TestRunner) -> Result<(), String> {
    r.run(&(sample(2), sample(2)), |(a, b)| {
        let t = two_group_t(&a, &b, TTestVariant::Pooled).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let f = anova_oneway(&[&a, &b]).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(rel_close(f.f, t.t * t.t, 1e-9), "F {} vs t² {}", f.f, t.t * t.t);
        prop_assert!(rel_close(f.p, t.p, 1e-7), "p {} vs {}", f.p, t.p);
        Ok(())
    })
    .map_err(|e| e.to_string())
}

fn t_antisymmetry(r: &mut TestRunner) -> Result<(), String> {
    r.run(&(sample(2), sample(2)), |(a, b)| {
        for variant in [TTestVariant::Pooled, TTestVariant::Welch] {
            let ab = two_group_t(&a, &b, variant).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let ba = two_group_t(&b, &a, variant).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert!(rel_close(ab.t, -ba.t, 1e-12));
            prop_assert!(rel_close(ab.p, ba.p, 1e-12));
            prop_assert!(rel_close(ab.df, ba.df, 1e-12));
        }
        Ok(())
    })
    .map_err(|e| e.to_string())
}

fn row(i: usize, level: u8, neg: f64, neutral: f64) -> SummaryRow {
    let rest = (1.0 - neg - neutral).max(0.0);
    let means = [neg * 0.4, neg * 0.05, neg * 0.2, rest * 0.8, neg * 0.35, rest * 0.2, neutral];
    SummaryRow {
        video_id: format!("v{i:03}"),
        country_iso: ["DE", "FR", "HU", "PL"][i % 4].into(),
        party: format!("party{}", i % 7),
        leader: format!("leader{i}"),
        populism_category: PopulismCategory::new(level).unwrap(),
        summary: VideoSummary {
            video_id: format!("v{i:03}"),
            frame_count: 300,
            means,
            mean_negative: negative_score(&means),
            dominance: [0.3, 0.0, 0.1, 0.1, 0.2, 0.0, 0.3],
            negative_dominant_fraction: neg,
        },
    }
}

fn figure_determinism(r: &mut TestRunner) -> Result<(), String> {
    let levels = vec((1u8..=4, 0.0f64..0.6, 0.0f64..0.4), 12..40);
    let mut cfg = r.config().clone();
    cfg.cases = 24;
    TestRunner::new(cfg)
        .run(&(levels, any::<u64>()), |(specs, seed)| {
            let rows: Vec<SummaryRow> = specs.iter().enumerate().map(|(i, (l, n, u))| row(i, *l, *n, *u)).collect();
            let lanes = vec![Lane {
                label: "all".into(),
                color: "#333333".into(),
                values: rows.iter().map(|r| Measure::Negative.value(r)).collect(),
            }];
            let spec = FigureSpec::new(Measure::Negative, Grouping::FourLevel);
            let a = raincloud(&lanes, &spec, seed).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let b = raincloud(&lanes, &spec, seed).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(a, b);

            let d1 = tempfile::tempdir().unwrap();
            let d2 = tempfile::tempdir().unwrap();
            let o1 = render_figures(&rows, "uniform300", d1.path(), seed).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let o2 = render_figures(&rows, "uniform300", d2.path(), seed).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(o1.written.len(), o2.written.len());
            for (p1, p2) in o1.written.iter().zip(&o2.written) {
                prop_assert_eq!(p1.file_name(), p2.file_name());
                prop_assert!(std::fs::read(p1).unwrap() == std::fs::read(p2).unwrap(), "{:?} differs", p1.file_name());
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn run() -> Check {
    let properties: [Property; 8] = [
        ("emotion scores close on the simplex", simplex_closure),
        ("negative score is the additive sum of four components", negative_additivity),
        ("argmax tie-break and positive-scale invariance", argmax_rules),
        ("sampler index properties", sampler_indices),
        ("NMS is idempotent", nms_idempotent),
        ("F equals pooled t squared for two groups", f_is_t_squared),
        ("t-test antisymmetry", t_antisymmetry),
        ("figures re-render byte-identically", figure_determinism),
    ];
    let mut failures = Vec::new();
    let mut passed = Vec::new();
    for (name, prop) in properties {
        match prop(&mut runner()) {
            Ok(()) => passed.push(name),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    if failures.is_empty() {
        Ok(vec![format!("{} properties held: {}", passed.len(), passed.join("; "))])
    } else {
        Err(failures)
    }
}
