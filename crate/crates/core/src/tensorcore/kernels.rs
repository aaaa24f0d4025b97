//! Forward kernels and their vector-Jacobian products.
//!
//! Convolution and concatenation kernels accept either a single window
//! (`rows x cols`) or a batch of windows (`batch x rows x cols`); the output
//! keeps the same rank as the input.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::Tensor;

/// `(batch, rows, cols, batched)` of a rank-2 or rank-3 tensor.
fn windows(x: &Tensor<impl Scalar>, op: &'static str) -> Result<(usize, usize, usize, bool)> {
    match *x.shape() {
        [r, c] => Ok((1, r, c, false)),
        [b, r, c] => Ok((b, r, c, true)),
        _ => Err(Error::dim(
            op,
            format!("expected a window or a batch of windows, got shape {:?}", x.shape()),
        )),
    }
}

fn window_shape(batch: usize, rows: usize, cols: usize, batched: bool) -> Vec<usize> {
    if batched {
        vec![batch, rows, cols]
    } else {
        vec![rows, cols]
    }
}

fn expect_vector<T: Scalar>(v: &Tensor<T>, len: usize, op: &'static str, what: &str) -> Result<()> {
    if v.shape() == [len] {
        Ok(())
    } else {
        Err(Error::dim(
            op,
            format!("{what} must have shape [{len}], got {:?}", v.shape()),
        ))
    }
}

/// Weighted sum over the series axis, applied to every time column.
///
/// `input` is `M x N` (or `B x M x N`), `kernels` is `K1 x M`, `bias` is `K1`;
/// the output is `K1 x N`.
pub fn conv_feature_1d<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    const OP: &str = "conv_feature_1d";
    let (b, m, n, batched) = windows(input, OP)?;
    let [k1, km] = *kernels.shape() else {
        return Err(Error::dim(OP, format!("kernels must be K1 x M, got {:?}", kernels.shape())));
    };
    if km != m {
        return Err(Error::dim(OP, format!("kernel length {km} != series count {m}")));
    }
    expect_vector(bias, k1, OP, "bias")?;

    let (x, w, bs) = (input.data(), kernels.data(), bias.data());
    let mut out = Vec::with_capacity(b * k1 * n);
    for bi in 0..b {
        let xb = &x[bi * m * n..(bi + 1) * m * n];
        for k in 0..k1 {
            let wk = &w[k * m..(k + 1) * m];
            for j in 0..n {
                let mut acc = bs[k];
                for (mi, &wv) in wk.iter().enumerate() {
                    acc += wv * xb[mi * n + j];
                }
                out.push(acc);
            }
        }
    }
    Tensor::new(window_shape(b, k1, n, batched), out)
}

/// Gradients of [`conv_feature_1d`] with respect to `(input, kernels, bias)`.
pub(crate) fn conv_feature_1d_vjp<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    grad: &[T],
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let (b, m, n, _) = windows(input, "conv_feature_1d").expect("checked in forward");
    let k1 = kernels.shape()[0];
    let (x, w) = (input.data(), kernels.data());
    let mut gx = vec![T::zero(); x.len()];
    let mut gw = vec![T::zero(); w.len()];
    let mut gb = vec![T::zero(); k1];
    for bi in 0..b {
        for k in 0..k1 {
            for j in 0..n {
                let g = grad[(bi * k1 + k) * n + j];
                if g == T::zero() {
                    continue;
                }
                gb[k] += g;
                for mi in 0..m {
                    let xi = (bi * m + mi) * n + j;
                    gw[k * m + mi] += g * x[xi];
                    gx[xi] += g * w[k * m + mi];
                }
            }
        }
    }
    (gx, gw, gb)
}

/// Valid convolution with `K2` kernels of size `M x 2`: each output column
/// mixes two adjacent time steps across all series.
///
/// `input` is `M x N` (or `B x M x N`), `kernels` is `K2 x M x 2`, `bias` is
/// `K2`; the output is `K2 x (N - 1)`.
pub fn conv_temporal_2d<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    const OP: &str = "conv_temporal_2d";
    let (b, m, n, batched) = windows(input, OP)?;
    if n < 2 {
        return Err(Error::dim(OP, format!("need at least 2 time steps, got {n}")));
    }
    let [k2, km, 2] = *kernels.shape() else {
        return Err(Error::dim(OP, format!("kernels must be K2 x M x 2, got {:?}", kernels.shape())));
    };
    if km != m {
        return Err(Error::dim(OP, format!("kernel height {km} != series count {m}")));
    }
    expect_vector(bias, k2, OP, "bias")?;

    let (x, w, bs) = (input.data(), kernels.data(), bias.data());
    let cols = n - 1;
    let mut out = Vec::with_capacity(b * k2 * cols);
    for bi in 0..b {
        let xb = &x[bi * m * n..(bi + 1) * m * n];
        for k in 0..k2 {
            let wk = &w[k * m * 2..(k + 1) * m * 2];
            for j in 0..cols {
                let mut acc = bs[k];
                for mi in 0..m {
                    acc += wk[mi * 2] * xb[mi * n + j] + wk[mi * 2 + 1] * xb[mi * n + j + 1];
                }
                out.push(acc);
            }
        }
    }
    Tensor::new(window_shape(b, k2, cols, batched), out)
}

pub(crate) fn conv_temporal_2d_vjp<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    grad: &[T],
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let (b, m, n, _) = windows(input, "conv_temporal_2d").expect("checked in forward");
    let k2 = kernels.shape()[0];
    let cols = n - 1;
    let (x, w) = (input.data(), kernels.data());
    let mut gx = vec![T::zero(); x.len()];
    let mut gw = vec![T::zero(); w.len()];
    let mut gb = vec![T::zero(); k2];
    for bi in 0..b {
        for k in 0..k2 {
            for j in 0..cols {
                let g = grad[(bi * k2 + k) * cols + j];
                if g == T::zero() {
                    continue;
                }
                gb[k] += g;
                for mi in 0..m {
                    let x0 = (bi * m + mi) * n + j;
                    let wi = (k * m + mi) * 2;
                    gw[wi] += g * x[x0];
                    gw[wi + 1] += g * x[x0 + 1];
                    gx[x0] += g * w[wi];
                    gx[x0 + 1] += g * w[wi + 1];
                }
            }
        }
    }
    (gx, gw, gb)
}

/// Row-wise concatenation of `c1` (`K1 x N`) and `c2` (`K2 x (N-1)`), with a
/// zero column appended to `c2` so both blocks span `N` columns.
pub fn concat_time_pad<T: Scalar>(c1: &Tensor<T>, c2: &Tensor<T>) -> Result<Tensor<T>> {
    const OP: &str = "concat_time_pad";
    let (b1, k1, n, batched1) = windows(c1, OP)?;
    let (b2, k2, n2, batched2) = windows(c2, OP)?;
    if batched1 != batched2 || b1 != b2 {
        return Err(Error::dim(OP, format!("batch mismatch {:?} vs {:?}", c1.shape(), c2.shape())));
    }
    if n != n2 + 1 {
        return Err(Error::dim(
            OP,
            format!("c1 must have exactly one more column than c2 ({n} vs {n2})"),
        ));
    }
    let rows = k1 + k2;
    let mut out = Vec::with_capacity(b1 * rows * n);
    for bi in 0..b1 {
        out.extend_from_slice(&c1.data()[bi * k1 * n..(bi + 1) * k1 * n]);
        for k in 0..k2 {
            let start = (bi * k2 + k) * n2;
            out.extend_from_slice(&c2.data()[start..start + n2]);
            out.push(T::zero());
        }
    }
    Tensor::new(window_shape(b1, rows, n, batched1), out)
}

pub(crate) fn concat_time_pad_vjp<T: Scalar>(
    c1_shape: &[usize],
    c2_shape: &[usize],
    grad: &[T],
) -> (Vec<T>, Vec<T>) {
    let (b, k1, n) = match *c1_shape {
        [r, c] => (1, r, c),
        [b, r, c] => (b, r, c),
        _ => unreachable!("checked in forward"),
    };
    let k2 = c2_shape[c2_shape.len() - 2];
    let rows = k1 + k2;
    let mut g1 = Vec::with_capacity(b * k1 * n);
    let mut g2 = Vec::with_capacity(b * k2 * (n - 1));
    for bi in 0..b {
        let gb = &grad[bi * rows * n..(bi + 1) * rows * n];
        g1.extend_from_slice(&gb[..k1 * n]);
        for k in 0..k2 {
            let start = (k1 + k) * n;
            g2.extend_from_slice(&gb[start..start + n - 1]);
        }
    }
    (g1, g2)
}

/// Column `step` of every window, as an `F x B` matrix (batch along columns).
pub fn time_step<T: Scalar>(x: &Tensor<T>, step: usize) -> Result<Tensor<T>> {
    const OP: &str = "time_step";
    let (b, f, n, _) = windows(x, OP)?;
    if step >= n {
        return Err(Error::dim(OP, format!("step {step} out of {n} columns")));
    }
    let mut out = vec![T::zero(); f * b];
    for bi in 0..b {
        for fi in 0..f {
            out[fi * b + bi] = x.data()[(bi * f + fi) * n + step];
        }
    }
    Tensor::new(vec![f, b], out)
}

pub(crate) fn time_step_vjp<T: Scalar>(x_shape: &[usize], step: usize, grad: &[T], gx: &mut [T]) {
    let (b, f, n) = match *x_shape {
        [r, c] => (1, r, c),
        [b, r, c] => (b, r, c),
        _ => unreachable!("checked in forward"),
    };
    for bi in 0..b {
        for fi in 0..f {
            gx[(bi * f + fi) * n + step] += grad[fi * b + bi];
        }
    }
}

fn matrix_dims<T: Scalar>(a: &Tensor<T>, op: &'static str) -> Result<(usize, usize)> {
    match *a.shape() {
        [r, c] => Ok((r, c)),
        _ => Err(Error::dim(op, format!("expected a matrix, got shape {:?}", a.shape()))),
    }
}

/// `a (R x K) * b (K x C)`.
pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    const OP: &str = "matmul";
    let (r, k) = matrix_dims(a, OP)?;
    let (kb, c) = matrix_dims(b, OP)?;
    if k != kb {
        return Err(Error::dim(OP, format!("{:?} x {:?}", a.shape(), b.shape())));
    }
    let mut out = vec![T::zero(); r * c];
    let (ad, bd) = (a.data(), b.data());
    for i in 0..r {
        let row = &mut out[i * c..(i + 1) * c];
        for p in 0..k {
            let av = ad[i * k + p];
            if av == T::zero() {
                continue;
            }
            let brow = &bd[p * c..(p + 1) * c];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Tensor::new(vec![r, c], out)
}

/// Accumulates `grad * b^T` into `ga` and `a^T * grad` into `gb`.
pub(crate) fn matmul_vjp<T: Scalar>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    grad: &[T],
    ga: Option<&mut [T]>,
    gb: Option<&mut [T]>,
) {
    let (r, k) = (a.shape()[0], a.shape()[1]);
    let c = b.shape()[1];
    let (ad, bd) = (a.data(), b.data());
    if let Some(ga) = ga {
        for i in 0..r {
            let grow = &grad[i * c..(i + 1) * c];
            for p in 0..k {
                let brow = &bd[p * c..(p + 1) * c];
                let mut acc = T::zero();
                for (&g, &bv) in grow.iter().zip(brow) {
                    acc += g * bv;
                }
                ga[i * k + p] += acc;
            }
        }
    }
    if let Some(gb) = gb {
        for i in 0..r {
            let grow = &grad[i * c..(i + 1) * c];
            for p in 0..k {
                let av = ad[i * k + p];
                if av == T::zero() {
                    continue;
                }
                let out = &mut gb[p * c..(p + 1) * c];
                for (o, &g) in out.iter_mut().zip(grow) {
                    *o += av * g;
                }
            }
        }
    }
}

/// Adds `bias[r]` to every entry of row `r`.
pub fn add_bias<T: Scalar>(a: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    const OP: &str = "add_bias";
    let (r, c) = matrix_dims(a, OP)?;
    expect_vector(bias, r, OP, "bias")?;
    let mut out = a.data().to_vec();
    for (i, &bv) in bias.data().iter().enumerate() {
        for o in &mut out[i * c..(i + 1) * c] {
            *o += bv;
        }
    }
    Tensor::new(vec![r, c], out)
}

/// Rows `start..start + len` of a matrix.
pub fn row_slice<T: Scalar>(a: &Tensor<T>, start: usize, len: usize) -> Result<Tensor<T>> {
    const OP: &str = "row_slice";
    let (r, c) = matrix_dims(a, OP)?;
    if start + len > r {
        return Err(Error::dim(OP, format!("rows {start}..{} of {r}", start + len)));
    }
    Tensor::new(vec![len, c], a.data()[start * c..(start + len) * c].to_vec())
}

/// Mean of absolute values.
pub fn mean_abs<T: Scalar>(a: &Tensor<T>) -> Result<T> {
    if a.numel() == 0 {
        return Err(Error::Contract("mean_abs of an empty tensor".into()));
    }
    let sum: T = a.data().iter().map(|v| v.abs()).sum();
    Ok(sum / T::lit(a.numel() as f64))
}

/// Subgradient of `|x|` with the value at zero pinned to zero.
#[inline]
pub(crate) fn abs_slope<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    // Split on sign so exp never overflows.
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
