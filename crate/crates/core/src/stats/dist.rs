//! Distribution functions used by the inferential tests: Student t, Fisher F
//! and the studentized range.
//!
//! Everything here is self-contained: the incomplete beta function drives the
//! t and F families, and the studentized range is a two-level Gauss-Legendre
//! quadrature of its standard double-integral representation.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn check_df(name: &str, df: f64) -> Result<()> {
    if df.is_nan() || df <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {df}"
        )));
    }
    Ok(())
}

/// Upper tail of Student's t: `P(T > x)`.
pub fn t_sf(x: f64, df: f64) -> Result<f64> {
    check_df("df", df)?;
    if x.is_nan() {
        return Err(Error::InvalidParameter("t statistic is NaN".into()));
    }
    if df.is_infinite() {
        return Ok(normal_sf(x));
    }
    let tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + x * x));
    Ok(if x > 0.0 { tail } else { 1.0 - tail })
}

/// Student's t cumulative distribution function.
pub fn t_cdf(x: f64, df: f64) -> Result<f64> {
    t_sf(-x, df)
}

/// Two-sided p-value for an observed t statistic.
pub fn t_two_sided_p(t: f64, df: f64) -> Result<f64> {
    Ok((2.0 * t_sf(t.abs(), df)?).min(1.0))
}

/// Fisher F cumulative distribution function.
pub fn f_cdf(x: f64, d1: f64, d2: f64) -> Result<f64> {
    check_df("d1", d1)?;
    check_df("d2", d2)?;
    if x.is_nan() {
        return Err(Error::InvalidParameter("F statistic is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(incomplete_beta(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2)))
}

/// Upper tail of the F distribution, computed without cancellation.
pub fn f_sf(x: f64, d1: f64, d2: f64) -> Result<f64> {
    check_df("d1", d1)?;
    check_df("d2", d2)?;
    if x.is_nan() {
        return Err(Error::InvalidParameter("F statistic is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x)))
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let j = j as f64;
                let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

const GL_ORDER: usize = 16;

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// Composite Gauss-Legendre integral of `f` over `[lo, hi]` split into `panels`.
fn integrate_gl<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    let (nodes, weights) = gl16();
    let width = (hi - lo) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        let mut panel = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            panel += w * f(mid + half * x);
        }
        total += panel * half;
    }
    total
}

/// Distribution of the range of `k` iid standard normals: `P(R <= w)`.
fn normal_range_cdf(w: f64, k: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let integrand = |z: f64| {
        let inner = normal_cdf(z) - normal_cdf(z - w);
        if inner <= 0.0 {
            0.0
        } else {
            normal_pdf(z) * inner.powf(k - 1.0)
        }
    };
    // The integrand vanishes outside [-8.5, 8.5 + w]; beyond z = 8.5 the
    // normal density is below 1e-15, so the upper limit can stay fixed.
    let value = k * integrate_gl(integrand, -8.5, 8.5, 24);
    value.clamp(0.0, 1.0)
}

/// Studentized range cumulative distribution `P(Q <= q)` for `k` groups and
/// `df` error degrees of freedom (`df = inf` gives the normal range).
pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "studentized range needs k >= 2, got {k}"
        )));
    }
    check_df("df", df)?;
    if q.is_nan() {
        return Err(Error::InvalidParameter("q is NaN".into()));
    }
    if q <= 0.0 {
        return Ok(0.0);
    }
    if q.is_infinite() {
        return Ok(1.0);
    }
    let k = k as f64;
    if df.is_infinite() || df > 50_000.0 {
        return Ok(normal_range_cdf(q, k));
    }
    // s = sqrt(chi2_df / df) has log-density
    //   ln 2 + (df/2) ln(df/2) - lnG(df/2) + (df-1) ln s - df s^2 / 2
    let log_norm = LN_2 + 0.5 * df * (0.5 * df).ln() - ln_gamma(0.5 * df);
    let density = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            (log_norm + (df - 1.0) * s.ln() - 0.5 * df * s * s).exp()
        }
    };
    let mode = if df > 1.0 { ((df - 1.0) / df).sqrt() } else { 0.0 };
    let spread = (0.5 / df).sqrt();
    let lo = (mode - 14.0 * spread).max(0.0);
    let hi = mode + 14.0 * spread.max(0.6);
    let value = integrate_gl(|s| density(s) * normal_range_cdf(q * s, k), lo, hi, 40);
    Ok(value.clamp(0.0, 1.0))
}

/// Upper tail of the studentized range, the Tukey HSD p-value.
pub fn studentized_range_sf(q: f64, k: usize, df: f64) -> Result<f64> {
    Ok((1.0 - studentized_range_cdf(q, k, df)?).clamp(0.0, 1.0))
}

/// Inverts a monotone CDF by bracketing and bisection.
fn invert_monotone<F: Fn(f64) -> Result<f64>>(
    p: f64,
    cdf: F,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "probability must lie in (0, 1), got {p}"
        )));
    }
    if p == 0.0 || p == 1.0 {
        return Err(Error::InvalidParameter(
            "quantile undefined at probability 0 or 1".into(),
        ));
    }
    let mut expansions = 0;
    while cdf(lo)? > p {
        lo = if lo < 0.0 { lo * 2.0 } else { lo * 0.5 - 1.0 };
        expansions += 1;
        if expansions > 200 {
            return Err(Error::InvalidParameter("quantile bracket failed".into()));
        }
    }
    while cdf(hi)? < p {
        hi = if hi > 0.0 { hi * 2.0 } else { hi * 0.5 + 1.0 };
        expansions += 1;
        if expansions > 400 {
            return Err(Error::InvalidParameter("quantile bracket failed".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn t_quantile(p: f64, df: f64) -> Result<f64> {
    check_df("df", df)?;
    invert_monotone(p, |x| t_cdf(x, df), -10.0, 10.0)
}

pub fn f_quantile(p: f64, d1: f64, d2: f64) -> Result<f64> {
    check_df("d1", d1)?;
    check_df("d2", d2)?;
    invert_monotone(p, |x| f_cdf(x, d1, d2), 0.0, 10.0)
}

pub fn studentized_range_quantile(p: f64, k: usize, df: f64) -> Result<f64> {
    invert_monotone(p, |x| studentized_range_cdf(x, k, df), 0.0, 10.0)
}
