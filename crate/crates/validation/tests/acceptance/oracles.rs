//! The t, F and studentized-range distribution functions against oracles
//! that share no code with them: trigonometric-substitution quadrature for
//! t and F, Monte Carlo simulation for the studentized range.

use std::f64::consts::FRAC_PI_2;

use face_affect::stats::dist::{f_cdf, studentized_range_cdf, t_cdf};
use quadrature::double_exponential::integrate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::{Check, Tally};

const DFS: [f64; 3] = [5.0, 30.0, 199.0];
const QUAD_TOL: f64 = 1e-6;
const MC_TOL: f64 = 1e-3;
const MC_DRAWS: usize = 10_000_000;

/// Integral over [a, b] split into equal pieces so each stays well resolved.
fn piecewise(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64) -> f64 {
    let pieces = 32;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| integrate(f, a + i as f64 * h, a + (i + 1) as f64 * h, 1e-14).integral)
        .sum()
}

/// With x = sqrt(df) tan(u) the t density becomes proportional to
/// cos(u)^(df-1) on (-pi/2, pi/2).
fn t_oracle(x: f64, df: f64) -> f64 {
    let g = move |u: f64| u.cos().powf(df - 1.0);
    let whole = piecewise(g, 0.0, FRAC_PI_2);
    let upto = piecewise(g, 0.0, (x.abs() / df.sqrt()).atan());
    0.5 + x.signum() * 0.5 * upto / whole
}

/// With x = (d2/d1) tan(u)^2 the F density becomes proportional to
/// sin(u)^(d1-1) cos(u)^(d2-1) on (0, pi/2).
fn f_oracle(x: f64, d1: f64, d2: f64) -> f64 {
    let g = move |u: f64| u.sin().powf(d1 - 1.0) * u.cos().powf(d2 - 1.0);
    let whole = piecewise(g, 0.0, FRAC_PI_2);
    let upto = piecewise(g, 0.0, (d1 * x / d2).sqrt().atan());
    upto / whole
}

/// Empirical CDF of max-min of `k` standard normals over an independent
/// chi-based scale, at each of `qs`.
fn range_monte_carlo(k: usize, df: f64, qs: &[f64], seed: u64) -> Vec<f64> {
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).min(16);
    let per = MC_DRAWS / threads;
    let counts: Vec<Vec<usize>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                s.spawn(move || {
                    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ (t as u64 * 0x9E37_79B9));
                    let chi = ChiSquared::new(df).unwrap();
                    let mut hits = vec![0usize; qs.len()];
                    let draws = if t == threads - 1 { MC_DRAWS - per * (threads - 1) } else { per };
                    for _ in 0..draws {
                        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                        for _ in 0..k {
                            let z: f64 = rng.sample(StandardNormal);
                            lo = lo.min(z);
                            hi = hi.max(z);
                        }
                        let s = (chi.sample(&mut rng) / df).sqrt();
                        let q = (hi - lo) / s;
                        for (h, &qq) in hits.iter_mut().zip(qs) {
                            if q <= qq {
                                *h += 1;
                            }
                        }
                    }
                    hits
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    (0..qs.len())
        .map(|i| counts.iter().map(|c| c[i]).sum::<usize>() as f64 / MC_DRAWS as f64)
        .collect()
}

pub fn run() -> Check {
    let mut t = Tally::default();
    let mut worst_quad: f64 = 0.0;
    let mut worst_mc: f64 = 0.0;

    for df in DFS {
        for x in [-6.0, -3.5, -1.96, -0.5, 0.0, 0.3, 1.0, 2.5, 4.691] {
            let got = t_cdf(x, df).unwrap();
            let want = t_oracle(x, df);
            worst_quad = worst_quad.max((got - want).abs());
            t.close(&format!("t cdf({x}, {df})"), got, want, QUAD_TOL);
        }
        for d1 in [1.0, 2.0, 3.0] {
            for x in [0.05, 0.5, 1.0, 2.7, 5.625, 12.0] {
                let got = f_cdf(x, d1, df).unwrap();
                let want = f_oracle(x, d1, df);
                worst_quad = worst_quad.max((got - want).abs());
                t.close(&format!("F cdf({x}, {d1}, {df})"), got, want, QUAD_TOL);
            }
        }
        // two-group range is |Z1 - Z2| / s = sqrt(2) |T|
        for q in [0.5, 1.5, 2.8, 4.0] {
            let got = studentized_range_cdf(q, 2, df).unwrap();
            let want = 2.0 * t_oracle(q / 2f64.sqrt(), df) - 1.0;
            worst_quad = worst_quad.max((got - want).abs());
            t.close(&format!("range cdf({q}, 2, {df}) via t"), got, want, QUAD_TOL);
        }
    }

    let qs = [0.8, 1.6, 2.5, 3.2, 3.9, 4.7];
    for (i, k) in [2usize, 4].into_iter().enumerate() {
        for (j, df) in DFS.into_iter().enumerate() {
            let sim = range_monte_carlo(k, df, &qs, 1000 + (i * 10 + j) as u64);
            for (q, want) in qs.iter().zip(sim) {
                let got = studentized_range_cdf(*q, k, df).unwrap();
                worst_mc = worst_mc.max((got - want).abs());
                t.close(&format!("range cdf({q}, {k}, {df}) vs simulation"), got, want, MC_TOL);
            }
        }
    }
    t.finish(format!(
        "max quadrature deviation {worst_quad:.1e}, max Monte Carlo deviation {worst_mc:.1e} ({MC_DRAWS} draws per cell)"
    ))
}
