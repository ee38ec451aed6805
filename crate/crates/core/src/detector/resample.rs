//! Separable image resampling on interleaved f32 rasters.

/// Per-output-pixel list of (source index, weight).
type Taps = Vec<Vec<(usize, f32)>>;

/// Area-averaging taps when shrinking; two-tap interpolation when growing
/// (the scheme OpenCV uses for `INTER_AREA`).
fn area_taps(src: usize, dst: usize) -> Taps {
    let scale = src as f64 / dst as f64;
    if scale >= 1.0 {
        (0..dst)
            .map(|d| {
                let lo = d as f64 * scale;
                let hi = ((d + 1) as f64 * scale).min(src as f64);
                let mut taps = Vec::new();
                let mut s = lo.floor() as usize;
                while (s as f64) < hi && s < src {
                    let a = lo.max(s as f64);
                    let b = hi.min((s + 1) as f64);
                    if b > a {
                        taps.push((s, ((b - a) / scale) as f32));
                    }
                    s += 1;
                }
                taps
            })
            .collect()
    } else {
        let inv = 1.0 / scale;
        (0..dst)
            .map(|d| {
                let sx = (d as f64 * scale).floor() as isize;
                let mut fx = (d + 1) as f64 - (sx + 1) as f64 * inv;
                fx = if fx <= 0.0 { 0.0 } else { fx - fx.floor() };
                let clamp = |i: isize| i.clamp(0, src as isize - 1) as usize;
                vec![(clamp(sx), (1.0 - fx) as f32), (clamp(sx + 1), fx as f32)]
            })
            .collect()
    }
}

/// Bilinear taps with half-pixel centers and clamped edges.
fn linear_taps(src: usize, dst: usize) -> Taps {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let x = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = x.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            let f = (x - lo as f64) as f32;
            vec![(lo, 1.0 - f), (hi, f)]
        })
        .collect()
}

fn apply(src: &[f32], sh: usize, sw: usize, ch: usize, ty: &Taps, tx: &Taps) -> Vec<f32> {
    let dw = tx.len();
    let dh = ty.len();
    let mut tmp = vec![0.0f32; sh * dw * ch];
    for y in 0..sh {
        let row = &src[y * sw * ch..(y + 1) * sw * ch];
        let out = &mut tmp[y * dw * ch..(y + 1) * dw * ch];
        for (x, taps) in tx.iter().enumerate() {
            for &(s, w) in taps {
                for c in 0..ch {
                    out[x * ch + c] += w * row[s * ch + c];
                }
            }
        }
    }
    let mut dst = vec![0.0f32; dh * dw * ch];
    for (y, taps) in ty.iter().enumerate() {
        let out = &mut dst[y * dw * ch..(y + 1) * dw * ch];
        for &(s, w) in taps {
            let row = &tmp[s * dw * ch..(s + 1) * dw * ch];
            for (o, v) in out.iter_mut().zip(row) {
                *o += w * v;
            }
        }
    }
    dst
}

/// Resizes an `sh x sw x ch` raster with area averaging.
pub fn resize_area(src: &[f32], sh: usize, sw: usize, ch: usize, dh: usize, dw: usize) -> Vec<f32> {
    debug_assert_eq!(src.len(), sh * sw * ch);
    apply(src, sh, sw, ch, &area_taps(sh, dh), &area_taps(sw, dw))
}

/// Area averaging when shrinking, bilinear when growing.
pub fn resize_smooth(src: &[f32], sh: usize, sw: usize, ch: usize, dh: usize, dw: usize) -> Vec<f32> {
    let pick = |s: usize, d: usize| if s >= d { area_taps(s, d) } else { linear_taps(s, d) };
    apply(src, sh, sw, ch, &pick(sh, dh), &pick(sw, dw))
}
