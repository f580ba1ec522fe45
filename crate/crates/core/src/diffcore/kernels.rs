// Raw slice kernels shared by the tape and the grad-free tensor functions.

use crate::error::{Error, Result};

pub(crate) fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

/// `ga += g · Bᵀ`
pub(crate) fn matmul_grad_a(g: &[f64], b: &[f64], ga: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let brow = &b[p * n..(p + 1) * n];
            ga[i * k + p] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
        }
    }
}

/// `gb += Aᵀ · g`
pub(crate) fn matmul_grad_b(a: &[f64], g: &[f64], gb: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let dst = &mut gb[p * n..(p + 1) * n];
            for (d, &gv) in dst.iter_mut().zip(grow) {
                *d += av * gv;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvDims {
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub t: usize,
    pub dilation: usize,
}

pub(crate) fn conv_dims(x: &[usize], kernel: &[usize], dilation: usize) -> Result<ConvDims> {
    if dilation == 0 {
        return Err(Error::Parameter {
            op: "causal_conv1d",
            message: "dilation must be at least 1".into(),
        });
    }
    let (&[c_in, t], &[c_out, kc_in, k]) = (x, kernel) else {
        return Err(Error::Dimension {
            op: "causal_conv1d",
            left: x.to_vec(),
            right: kernel.to_vec(),
        });
    };
    if c_in != kc_in {
        return Err(Error::Dimension {
            op: "causal_conv1d",
            left: x.to_vec(),
            right: kernel.to_vec(),
        });
    }
    if t == 0 {
        return Err(Error::EmptySequence("causal_conv1d"));
    }
    if k == 0 {
        return Err(Error::Parameter {
            op: "causal_conv1d",
            message: "kernel size must be at least 1".into(),
        });
    }
    Ok(ConvDims {
        c_in,
        c_out,
        k,
        t,
        dilation,
    })
}

// Tap j of the kernel reads input time t − (K−1−j)·dilation; negative
// times are the zero padding.
#[inline]
fn tap_offset(dims: ConvDims, j: usize) -> usize {
    (dims.k - 1 - j) * dims.dilation
}

pub(crate) fn causal_conv1d(x: &[f64], kernel: &[f64], dims: ConvDims) -> Vec<f64> {
    let ConvDims { c_in, c_out, k, t, .. } = dims;
    let mut out = vec![0.0; c_out * t];
    for c in 0..c_out {
        let orow = &mut out[c * t..(c + 1) * t];
        for i in 0..c_in {
            let xrow = &x[i * t..(i + 1) * t];
            for j in 0..k {
                let w = kernel[(c * c_in + i) * k + j];
                if w == 0.0 {
                    continue;
                }
                let off = tap_offset(dims, j);
                if off >= t {
                    continue;
                }
                for (o, &xv) in orow[off..].iter_mut().zip(xrow) {
                    *o += w * xv;
                }
            }
        }
    }
    out
}

pub(crate) fn conv_grad_input(g: &[f64], kernel: &[f64], gx: &mut [f64], dims: ConvDims) {
    let ConvDims { c_in, c_out, k, t, .. } = dims;
    for c in 0..c_out {
        let grow = &g[c * t..(c + 1) * t];
        for i in 0..c_in {
            let gxrow = &mut gx[i * t..(i + 1) * t];
            for j in 0..k {
                let w = kernel[(c * c_in + i) * k + j];
                let off = tap_offset(dims, j);
                if w == 0.0 || off >= t {
                    continue;
                }
                for (d, &gv) in gxrow.iter_mut().zip(&grow[off..]) {
                    *d += w * gv;
                }
            }
        }
    }
}

pub(crate) fn conv_grad_kernel(g: &[f64], x: &[f64], gk: &mut [f64], dims: ConvDims) {
    let ConvDims { c_in, c_out, k, t, .. } = dims;
    for c in 0..c_out {
        let grow = &g[c * t..(c + 1) * t];
        for i in 0..c_in {
            let xrow = &x[i * t..(i + 1) * t];
            for j in 0..k {
                let off = tap_offset(dims, j);
                if off >= t {
                    continue;
                }
                gk[(c * c_in + i) * k + j] += grow[off..]
                    .iter()
                    .zip(xrow)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            }
        }
    }
}

pub(crate) fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[inline]
pub(crate) fn huber_point(residual: f64, delta: f64) -> f64 {
    let a = residual.abs();
    if a <= delta {
        0.5 * residual * residual
    } else {
        delta * (a - 0.5 * delta)
    }
}

pub(crate) fn huber_mean(target: &[f64], pred: &[f64], delta: f64) -> f64 {
    let total: f64 = target
        .iter()
        .zip(pred)
        .map(|(y, p)| huber_point(y - p, delta))
        .sum();
    total / target.len() as f64
}

/// Derivative of the per-sample Huber value with respect to the prediction.
#[inline]
pub(crate) fn huber_grad_pred(target: f64, pred: f64, delta: f64) -> f64 {
    let r = target - pred;
    if r.abs() <= delta {
        -r
    } else {
        -delta * r.signum()
    }
}
