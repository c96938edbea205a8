//! Dense and 1-D convolution arithmetic shared by forward and backward.
//!
//! Every output slot is accumulated in a fixed order regardless of thread
//! count, so results are bit-identical across runs and machines with
//! different parallelism.

#![allow(clippy::too_many_arguments)]

use rayon::prelude::*;

/// y[b, co, i] = bias[co] + sum_{ci, w} k[co, ci, w] * x[b, ci, i + w - r]
/// with zero padding outside [0, l). `r = (w_len - 1) / 2`.
pub fn conv1d_forward(
    x: &[f64],
    k: &[f64],
    bias: &[f64],
    _b: usize,
    c_in: usize,
    l: usize,
    c_out: usize,
    w_len: usize,
    y: &mut [f64],
) {
    let r = (w_len - 1) / 2;
    y.par_chunks_mut(c_out * l)
        .enumerate()
        .for_each(|(bi, out_block)| {
            let x_block = &x[bi * c_in * l..(bi + 1) * c_in * l];
            for co in 0..c_out {
                let dst = &mut out_block[co * l..(co + 1) * l];
                dst.fill(bias[co]);
                for ci in 0..c_in {
                    let src = &x_block[ci * l..(ci + 1) * l];
                    let krow = &k[(co * c_in + ci) * w_len..(co * c_in + ci + 1) * w_len];
                    for (w, &kv) in krow.iter().enumerate() {
                        if kv == 0.0 {
                            continue;
                        }
                        let off = w as isize - r as isize;
                        let (i0, i1) = valid_range(off, l);
                        for i in i0..i1 {
                            dst[i] += kv * src[(i as isize + off) as usize];
                        }
                    }
                }
            }
        });
}

/// Gradient of the convolution with respect to its input.
pub fn conv1d_backward_input(
    g: &[f64],
    k: &[f64],
    _b: usize,
    c_in: usize,
    l: usize,
    c_out: usize,
    w_len: usize,
    dx: &mut [f64],
) {
    let r = (w_len - 1) / 2;
    dx.par_chunks_mut(c_in * l)
        .enumerate()
        .for_each(|(bi, dx_block)| {
            let g_block = &g[bi * c_out * l..(bi + 1) * c_out * l];
            for ci in 0..c_in {
                let dst = &mut dx_block[ci * l..(ci + 1) * l];
                dst.fill(0.0);
                for co in 0..c_out {
                    let grow = &g_block[co * l..(co + 1) * l];
                    let krow = &k[(co * c_in + ci) * w_len..(co * c_in + ci + 1) * w_len];
                    for (w, &kv) in krow.iter().enumerate() {
                        if kv == 0.0 {
                            continue;
                        }
                        // dx[j] += kv * g[j - (w - r)]
                        let off = r as isize - w as isize;
                        let (j0, j1) = valid_range(off, l);
                        for j in j0..j1 {
                            dst[j] += kv * grow[(j as isize + off) as usize];
                        }
                    }
                }
            }
        });
}

/// Gradient of the convolution with respect to the kernel.
pub fn conv1d_backward_kernel(
    x: &[f64],
    g: &[f64],
    b: usize,
    c_in: usize,
    l: usize,
    c_out: usize,
    w_len: usize,
    dk: &mut [f64],
) {
    let r = (w_len - 1) / 2;
    dk.par_chunks_mut(c_in * w_len)
        .enumerate()
        .for_each(|(co, dk_block)| {
            for ci in 0..c_in {
                for w in 0..w_len {
                    let off = w as isize - r as isize;
                    let (i0, i1) = valid_range(off, l);
                    let mut acc = 0.0;
                    for bi in 0..b {
                        let grow = &g[(bi * c_out + co) * l..(bi * c_out + co + 1) * l];
                        let src = &x[(bi * c_in + ci) * l..(bi * c_in + ci + 1) * l];
                        for i in i0..i1 {
                            acc += grow[i] * src[(i as isize + off) as usize];
                        }
                    }
                    dk_block[ci * w_len + w] = acc;
                }
            }
        });
}

/// Gradient of the convolution with respect to the bias.
pub fn conv1d_backward_bias(g: &[f64], b: usize, c_out: usize, l: usize, db: &mut [f64]) {
    db.par_iter_mut().enumerate().for_each(|(co, out)| {
        let mut acc = 0.0;
        for bi in 0..b {
            let grow = &g[(bi * c_out + co) * l..(bi * c_out + co + 1) * l];
            acc += grow.iter().sum::<f64>();
        }
        *out = acc;
    });
}

fn valid_range(off: isize, l: usize) -> (usize, usize) {
    let lo = (-off).max(0) as usize;
    let hi_signed = l as isize - off.max(0);
    let hi = hi_signed.max(0) as usize;
    (lo.min(l), hi.min(l))
}

/// y[b, o] = bias[o] + sum_i w[o, i] * x[b, i]
pub fn dense_forward(
    x: &[f64],
    w: &[f64],
    bias: Option<&[f64]>,
    b: usize,
    d_in: usize,
    d_out: usize,
    y: &mut [f64],
) {
    let _ = b;
    y.par_chunks_mut(d_out).enumerate().for_each(|(bi, dst)| {
        let xrow = &x[bi * d_in..(bi + 1) * d_in];
        for o in 0..d_out {
            let wrow = &w[o * d_in..(o + 1) * d_in];
            let mut acc = match bias {
                Some(bv) => bv[o],
                None => 0.0,
            };
            for i in 0..d_in {
                acc += wrow[i] * xrow[i];
            }
            dst[o] = acc;
        }
    });
}

pub fn dense_backward_input(
    g: &[f64],
    w: &[f64],
    b: usize,
    d_in: usize,
    d_out: usize,
    dx: &mut [f64],
) {
    let _ = b;
    dx.par_chunks_mut(d_in).enumerate().for_each(|(bi, dst)| {
        dst.fill(0.0);
        let grow = &g[bi * d_out..(bi + 1) * d_out];
        for o in 0..d_out {
            let gv = grow[o];
            if gv == 0.0 {
                continue;
            }
            let wrow = &w[o * d_in..(o + 1) * d_in];
            for i in 0..d_in {
                dst[i] += gv * wrow[i];
            }
        }
    });
}

pub fn dense_backward_weight(
    x: &[f64],
    g: &[f64],
    b: usize,
    d_in: usize,
    d_out: usize,
    dw: &mut [f64],
) {
    dw.par_chunks_mut(d_in).enumerate().for_each(|(o, dst)| {
        dst.fill(0.0);
        for bi in 0..b {
            let gv = g[bi * d_out + o];
            if gv == 0.0 {
                continue;
            }
            let xrow = &x[bi * d_in..(bi + 1) * d_in];
            for i in 0..d_in {
                dst[i] += gv * xrow[i];
            }
        }
    });
}

pub fn dense_backward_bias(g: &[f64], b: usize, d_out: usize, db: &mut [f64]) {
    for (o, out) in db.iter_mut().enumerate() {
        let mut acc = 0.0;
        for bi in 0..b {
            acc += g[bi * d_out + o];
        }
        *out = acc;
    }
}
