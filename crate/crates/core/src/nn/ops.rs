use super::tensor::{strides, Tensor};
use crate::error::{Error, Result};

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Model(msg.into()))
}

fn dims4(t: &Tensor, op: &str) -> Result<[usize; 4]> {
    match t.shape() {
        &[n, c, h, w] => Ok([n, c, h, w]),
        s => err(format!("{op} expects a 4-d input, got {s:?}")),
    }
}

fn broadcast_shape(a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let r = a.len().max(b.len());
    let mut out = vec![0; r];
    for i in 0..r {
        let da = if i + a.len() >= r { a[i + a.len() - r] } else { 1 };
        let db = if i + b.len() >= r { b[i + b.len() - r] } else { 1 };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return err(format!("shapes {a:?} and {b:?} do not broadcast")),
        };
    }
    Ok(out)
}

/// Strides of `shape` viewed inside a broadcast result of rank `rank`;
/// broadcast axes get stride 0.
fn broadcast_strides(shape: &[usize], rank: usize) -> Vec<usize> {
    let s = strides(shape);
    let pad = rank - shape.len();
    (0..rank)
        .map(|i| if i < pad || shape[i - pad] == 1 { 0 } else { s[i - pad] })
        .collect()
}

/// Elementwise binary op with numpy-style broadcasting.
pub fn broadcast(a: &Tensor, b: &Tensor, f: impl Fn(f32, f32) -> f32) -> Result<Tensor> {
    if a.shape() == b.shape() {
        let data = a.data().iter().zip(b.data()).map(|(x, y)| f(*x, *y)).collect();
        return Tensor::new(a.shape().to_vec(), data);
    }
    if b.len() == 1 && a.shape().len() >= b.shape().len() {
        let y = b.data()[0];
        return Tensor::new(a.shape().to_vec(), a.data().iter().map(|x| f(*x, y)).collect());
    }
    let shape = broadcast_shape(a.shape(), b.shape())?;
    let rank = shape.len();
    let sa = broadcast_strides(a.shape(), rank);
    let sb = broadcast_strides(b.shape(), rank);
    let inner = shape[rank - 1];
    let n: usize = shape.iter().product();
    let mut out = Vec::with_capacity(n);
    let mut idx = vec![0usize; rank];
    let (ad, bd) = (a.data(), b.data());
    while out.len() < n {
        let mut oa = 0;
        let mut ob = 0;
        for d in 0..rank - 1 {
            oa += idx[d] * sa[d];
            ob += idx[d] * sb[d];
        }
        let (ia, ib) = (sa[rank - 1], sb[rank - 1]);
        for k in 0..inner {
            out.push(f(ad[oa + k * ia], bd[ob + k * ib]));
        }
        for d in (0..rank - 1).rev() {
            idx[d] += 1;
            if idx[d] < shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    Tensor::new(shape, out)
}

pub fn relu(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    y
}

pub fn prelu(x: &Tensor, slope: &Tensor) -> Result<Tensor> {
    broadcast(x, slope, |v, a| if v < 0.0 { a * v } else { v })
}

/// Padding for `auto_pad = SAME_UPPER`: extra padding goes to the end.
pub fn same_upper(input: usize, kernel: usize, stride: usize) -> (usize, usize) {
    let out = input.div_ceil(stride);
    let total = ((out - 1) * stride + kernel).saturating_sub(input);
    (total / 2, total - total / 2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub kernel: [usize; 2],
    pub strides: [usize; 2],
    /// top, left, bottom, right
    pub pads: [usize; 4],
    pub same_upper: bool,
}

impl Window {
    fn resolve(&self, h: usize, w: usize) -> Result<(usize, usize, [usize; 4])> {
        let pads = if self.same_upper {
            let (t, b) = same_upper(h, self.kernel[0], self.strides[0]);
            let (l, r) = same_upper(w, self.kernel[1], self.strides[1]);
            [t, l, b, r]
        } else {
            self.pads
        };
        let ph = h + pads[0] + pads[2];
        let pw = w + pads[1] + pads[3];
        if ph < self.kernel[0] || pw < self.kernel[1] {
            return err(format!(
                "window {:?} larger than padded input {ph}x{pw}",
                self.kernel
            ));
        }
        Ok((
            (ph - self.kernel[0]) / self.strides[0] + 1,
            (pw - self.kernel[1]) / self.strides[1] + 1,
            pads,
        ))
    }
}

pub fn conv2d(x: &Tensor, w: &Tensor, bias: Option<&Tensor>, win: &Window, group: usize) -> Result<Tensor> {
    let [n, c, h, wd] = dims4(x, "Conv")?;
    let [m, cg, kh, kw] = dims4(w, "Conv weight")?;
    if group == 0 || c != cg * group || m % group != 0 || [kh, kw] != win.kernel {
        return err(format!(
            "Conv weight {:?} incompatible with input {:?} and group {group}",
            w.shape(),
            x.shape()
        ));
    }
    if let Some(b) = bias {
        if b.len() != m {
            return err(format!("Conv bias has {} values for {m} filters", b.len()));
        }
    }
    let (oh, ow, pads) = win.resolve(h, wd)?;
    let mg = m / group;
    let k = cg * kh * kw;
    let plane = oh * ow;
    let mut out = vec![0.0f32; n * m * plane];
    let pointwise = kh == 1 && kw == 1 && win.strides == [1, 1] && pads == [0; 4];
    let mut col = if pointwise { Vec::new() } else { vec![0.0f32; k * plane] };
    let xd = x.data();
    let wdata = w.data();

    for b in 0..n {
        for g in 0..group {
            let x_off = (b * c + g * cg) * h * wd;
            let cols: &[f32] = if pointwise {
                &xd[x_off..x_off + cg * h * wd]
            } else {
                for ci in 0..cg {
                    let src = &xd[x_off + ci * h * wd..x_off + (ci + 1) * h * wd];
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let row = (ci * kh + ky) * kw + kx;
                            let dst = &mut col[row * plane..(row + 1) * plane];
                            for oy in 0..oh {
                                let iy = (oy * win.strides[0] + ky) as isize - pads[0] as isize;
                                let line = &mut dst[oy * ow..(oy + 1) * ow];
                                if iy < 0 || iy >= h as isize {
                                    line.fill(0.0);
                                    continue;
                                }
                                let srow = &src[iy as usize * wd..(iy as usize + 1) * wd];
                                for (ox, v) in line.iter_mut().enumerate() {
                                    let ix = (ox * win.strides[1] + kx) as isize - pads[1] as isize;
                                    *v = if ix < 0 || ix >= wd as isize { 0.0 } else { srow[ix as usize] };
                                }
                            }
                        }
                    }
                }
                &col
            };
            let w_off = g * mg * k;
            let o_off = (b * m + g * mg) * plane;
            let dst = &mut out[o_off..o_off + mg * plane];
            // SAFETY: slices are sized mg*k, k*plane and mg*plane with
            // row-major strides matching the dimensions passed.
            unsafe {
                matrixmultiply::sgemm(
                    mg,
                    k,
                    plane,
                    1.0,
                    wdata[w_off..w_off + mg * k].as_ptr(),
                    k as isize,
                    1,
                    cols.as_ptr(),
                    plane as isize,
                    1,
                    0.0,
                    dst.as_mut_ptr(),
                    plane as isize,
                    1,
                );
            }
            if let Some(bias) = bias {
                for (j, chunk) in dst.chunks_mut(plane).enumerate() {
                    let bv = bias.data()[g * mg + j];
                    chunk.iter_mut().for_each(|v| *v += bv);
                }
            }
        }
    }
    Tensor::new(vec![n, m, oh, ow], out)
}

pub fn max_pool(x: &Tensor, win: &Window) -> Result<Tensor> {
    let [n, c, h, w] = dims4(x, "MaxPool")?;
    let (oh, ow, pads) = win.resolve(h, w)?;
    let mut out = Vec::with_capacity(n * c * oh * ow);
    for plane in x.data().chunks(h * w) {
        for oy in 0..oh {
            let y0 = (oy * win.strides[0]) as isize - pads[0] as isize;
            for ox in 0..ow {
                let x0 = (ox * win.strides[1]) as isize - pads[1] as isize;
                let mut best = f32::NEG_INFINITY;
                for ky in 0..win.kernel[0] as isize {
                    let iy = y0 + ky;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..win.kernel[1] as isize {
                        let ix = x0 + kx;
                        if ix >= 0 && ix < w as isize {
                            best = best.max(plane[iy as usize * w + ix as usize]);
                        }
                    }
                }
                out.push(best);
            }
        }
    }
    Tensor::new(vec![n, c, oh, ow], out)
}

pub fn gemm(a: &Tensor, b: &Tensor, c: Option<&Tensor>, trans_b: bool, alpha: f32, beta: f32) -> Result<Tensor> {
    let (m, k) = match a.shape() {
        &[m, k] => (m, k),
        s => return err(format!("Gemm expects a 2-d A, got {s:?}")),
    };
    let (kb, nn, rsb, csb) = match (b.shape(), trans_b) {
        (&[r, cc], false) => (r, cc, cc as isize, 1),
        (&[r, cc], true) => (cc, r, 1, cc as isize),
        (s, _) => return err(format!("Gemm expects a 2-d B, got {s:?}")),
    };
    if k != kb {
        return err(format!("Gemm inner dimensions {k} and {kb} differ"));
    }
    let mut out = vec![0.0f32; m * nn];
    if let Some(c) = c {
        let cb = broadcast(&Tensor::zeros(vec![m, nn]), c, |_, y| y)?;
        out.copy_from_slice(cb.data());
    }
    let beta = if c.is_some() { beta } else { 0.0 };
    // SAFETY: A is m*k row-major, B is k*nn with the given strides, and the
    // output buffer holds m*nn values.
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            nn,
            alpha,
            a.data().as_ptr(),
            k as isize,
            1,
            b.data().as_ptr(),
            rsb,
            csb,
            beta,
            out.as_mut_ptr(),
            nn as isize,
            1,
        );
    }
    Tensor::new(vec![m, nn], out)
}

pub fn batch_norm(
    x: &Tensor,
    scale: &Tensor,
    bias: &Tensor,
    mean: &Tensor,
    var: &Tensor,
    eps: f32,
) -> Result<Tensor> {
    let shape = x.shape();
    if shape.len() < 2 {
        return err("BatchNormalization expects at least 2 dims");
    }
    let c = shape[1];
    if [scale, bias, mean, var].iter().any(|t| t.len() != c) {
        return err(format!("BatchNormalization parameters do not match {c} channels"));
    }
    let inner: usize = shape[2..].iter().product();
    let mut y = x.clone();
    for (i, chunk) in y.data_mut().chunks_mut(inner).enumerate() {
        let ch = i % c;
        let a = scale.data()[ch] / (var.data()[ch] + eps).sqrt();
        let b = bias.data()[ch] - mean.data()[ch] * a;
        chunk.iter_mut().for_each(|v| *v = *v * a + b);
    }
    Ok(y)
}

pub fn softmax(x: &Tensor, axis: i64) -> Result<Tensor> {
    let rank = x.shape().len() as i64;
    let ax = if axis < 0 { axis + rank } else { axis };
    if ax < 0 || ax >= rank {
        return err(format!("Softmax axis {axis} out of range for rank {rank}"));
    }
    let ax = ax as usize;
    let d = x.shape()[ax];
    let inner: usize = x.shape()[ax + 1..].iter().product();
    let outer: usize = x.shape()[..ax].iter().product();
    let mut y = x.clone();
    let data = y.data_mut();
    for o in 0..outer {
        for i in 0..inner {
            let at = |j: usize| (o * d + j) * inner + i;
            let mx = (0..d).map(|j| data[at(j)]).fold(f32::NEG_INFINITY, f32::max);
            let mut sum = 0.0;
            for j in 0..d {
                let e = (data[at(j)] - mx).exp();
                data[at(j)] = e;
                sum += e;
            }
            for j in 0..d {
                data[at(j)] /= sum;
            }
        }
    }
    Ok(y)
}

pub fn transpose(x: &Tensor, perm: &[usize]) -> Result<Tensor> {
    let shape = x.shape();
    let rank = shape.len();
    let mut seen = vec![false; rank];
    if perm.len() != rank || perm.iter().any(|&p| p >= rank || std::mem::replace(&mut seen[p], true)) {
        return err(format!("invalid permutation {perm:?} for rank {rank}"));
    }
    let in_strides = strides(shape);
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    let mut idx = vec![0usize; rank];
    let data = x.data();
    for _ in 0..n {
        let off: usize = idx.iter().zip(&src_strides).map(|(i, s)| i * s).sum();
        out.push(data[off]);
        for d in (0..rank).rev() {
            idx[d] += 1;
            if idx[d] < out_shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    Tensor::new(out_shape, out)
}

pub fn flatten(x: &Tensor, axis: usize) -> Result<Tensor> {
    if axis > x.shape().len() {
        return err(format!("Flatten axis {axis} out of range"));
    }
    let outer: usize = x.shape()[..axis].iter().product();
    let inner: usize = x.shape()[axis..].iter().product();
    x.clone().reshape(vec![outer, inner])
}

pub fn global_average_pool(x: &Tensor) -> Result<Tensor> {
    let [n, c, h, w] = dims4(x, "GlobalAveragePool")?;
    let data = x
        .data()
        .chunks(h * w)
        .map(|p| p.iter().sum::<f32>() / (h * w) as f32)
        .collect();
    Tensor::new(vec![n, c, 1, 1], data)
}

/// Bilinear resize of the two trailing axes with half-pixel centers and
/// edge clamping.
pub fn resize_linear(x: &Tensor, scale_h: f32, scale_w: f32) -> Result<Tensor> {
    let [n, c, h, w] = dims4(x, "Resize")?;
    let oh = (h as f32 * scale_h).floor() as usize;
    let ow = (w as f32 * scale_w).floor() as usize;
    if oh == 0 || ow == 0 {
        return err("Resize produces an empty output");
    }
    let coord = |o: usize, scale: f32, size: usize| {
        let src = ((o as f32 + 0.5) / scale - 0.5).clamp(0.0, (size - 1) as f32);
        let lo = src.floor() as usize;
        let hi = (lo + 1).min(size - 1);
        (lo, hi, src - lo as f32)
    };
    let ys: Vec<_> = (0..oh).map(|o| coord(o, scale_h, h)).collect();
    let xs: Vec<_> = (0..ow).map(|o| coord(o, scale_w, w)).collect();
    let mut out = Vec::with_capacity(n * c * oh * ow);
    for plane in x.data().chunks(h * w) {
        for &(y0, y1, fy) in &ys {
            for &(x0, x1, fx) in &xs {
                let top = plane[y0 * w + x0] * (1.0 - fx) + plane[y0 * w + x1] * fx;
                let bot = plane[y1 * w + x0] * (1.0 - fx) + plane[y1 * w + x1] * fx;
                out.push(top * (1.0 - fy) + bot * fy);
            }
        }
    }
    Tensor::new(vec![n, c, oh, ow], out)
}
