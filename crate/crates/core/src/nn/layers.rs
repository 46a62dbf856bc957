//! Layer kernels with their backward passes.
//!
//! Convolutions lower to GEMM through im2col. The slice-level functions are
//! what the network uses; the [`Tensor`] wrappers add shape validation.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Unfolds a `c×h×w` image into a `(c·k·k) × (h·w)` patch matrix for a
/// stride-1 convolution with `pad` zero padding and same-size output.
pub(crate) fn im2col<T: Scalar>(input: &[T], c: usize, h: usize, w: usize, k: usize, pad: usize, col: &mut [T]) {
    let p = h * w;
    debug_assert_eq!(col.len(), c * k * k * p);
    for ci in 0..c {
        let plane = &input[ci * p..(ci + 1) * p];
        for ky in 0..k {
            for kx in 0..k {
                let row = &mut col[((ci * k + ky) * k + kx) * p..][..p];
                let dy = ky as isize - pad as isize;
                let dx = kx as isize - pad as isize;
                let x_lo = (-dx).max(0) as usize;
                let x_hi = (w as isize - dx).min(w as isize).max(0) as usize;
                for y in 0..h {
                    let out = &mut row[y * w..(y + 1) * w];
                    let iy = y as isize + dy;
                    if iy < 0 || iy >= h as isize || x_lo >= x_hi {
                        out.fill(T::zero());
                        continue;
                    }
                    let src = &plane[iy as usize * w..][..w];
                    out[..x_lo].fill(T::zero());
                    out[x_hi..].fill(T::zero());
                    let sx = (x_lo as isize + dx) as usize;
                    out[x_lo..x_hi].copy_from_slice(&src[sx..sx + (x_hi - x_lo)]);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters patch gradients back onto the image.
pub(crate) fn col2im<T: Scalar>(col: &[T], c: usize, h: usize, w: usize, k: usize, pad: usize, out: &mut [T]) {
    let p = h * w;
    out.fill(T::zero());
    for ci in 0..c {
        let plane = &mut out[ci * p..(ci + 1) * p];
        for ky in 0..k {
            for kx in 0..k {
                let row = &col[((ci * k + ky) * k + kx) * p..][..p];
                let dy = ky as isize - pad as isize;
                let dx = kx as isize - pad as isize;
                let x_lo = (-dx).max(0) as usize;
                let x_hi = (w as isize - dx).min(w as isize).max(0) as usize;
                if x_lo >= x_hi {
                    continue;
                }
                for y in 0..h {
                    let iy = y as isize + dy;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let sx = (x_lo as isize + dx) as usize;
                    let dst = &mut plane[iy as usize * w + sx..][..x_hi - x_lo];
                    for (d, &g) in dst.iter_mut().zip(&row[y * w + x_lo..y * w + x_hi]) {
                        *d += g;
                    }
                }
            }
        }
    }
}

/// `out[co×p] = kernel[co×kk] · col[kk×p] + bias`.
pub(crate) fn conv_forward_cols<T: Scalar>(col: &[T], kernel: &[T], bias: &[T], co: usize, kk: usize, p: usize, out: &mut [T]) {
    for (row, &b) in out.chunks_exact_mut(p).zip(bias) {
        row.fill(b);
    }
    T::gemm(co, kk, p, kernel, (kk as isize, 1), col, (p as isize, 1), T::one(), out);
}

/// Accumulates kernel and bias gradients; writes the patch gradient when
/// `grad_col` is given.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward_cols<T: Scalar>(
    col: &[T],
    kernel: &[T],
    grad_out: &[T],
    co: usize,
    kk: usize,
    p: usize,
    grad_kernel: &mut [T],
    grad_bias: &mut [T],
    grad_col: Option<&mut [T]>,
) {
    T::gemm(co, p, kk, grad_out, (p as isize, 1), col, (1, p as isize), T::one(), grad_kernel);
    for (gb, row) in grad_bias.iter_mut().zip(grad_out.chunks_exact(p)) {
        *gb += row.iter().copied().sum::<T>();
    }
    if let Some(gc) = grad_col {
        T::gemm(kk, co, p, kernel, (1, kk as isize), grad_out, (p as isize, 1), T::zero(), gc);
    }
}

pub(crate) fn leaky_forward<T: Scalar>(x: &[T], alpha: T, out: &mut [T]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o = if v > T::zero() { v } else { alpha * v };
    }
}

/// Multiplies `grad` in place by the LeakyReLU derivative at `x`
/// (slope `alpha` at exactly zero).
pub(crate) fn leaky_backward_inplace<T: Scalar>(x: &[T], alpha: T, grad: &mut [T]) {
    for (g, &v) in grad.iter_mut().zip(x) {
        if v <= T::zero() {
            *g *= alpha;
        }
    }
}

/// 2×2 stride-2 max pool; `argmax` receives the flat input index of each
/// output's winner, the first maximum in row-major block order.
pub(crate) fn maxpool_forward<T: Scalar>(x: &[T], c: usize, h: usize, w: usize, out: &mut [T], argmax: &mut [usize]) {
    let (oh, ow) = (h / 2, w / 2);
    for ci in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let base = ci * h * w + 2 * oy * w + 2 * ox;
                let mut best = base;
                for idx in [base + 1, base + w, base + w + 1] {
                    if x[idx] > x[best] {
                        best = idx;
                    }
                }
                let o = (ci * oh + oy) * ow + ox;
                out[o] = x[best];
                argmax[o] = best;
            }
        }
    }
}

pub(crate) fn maxpool_backward<T: Scalar>(grad_out: &[T], argmax: &[usize], grad_in: &mut [T]) {
    grad_in.fill(T::zero());
    for (&g, &i) in grad_out.iter().zip(argmax) {
        grad_in[i] += g;
    }
}

pub(crate) fn dense_forward<T: Scalar>(x: &[T], weight: &[T], bias: &[T], out: &mut [T]) {
    let (n_out, n_in) = (bias.len(), x.len());
    out.copy_from_slice(bias);
    T::gemm(n_out, n_in, 1, weight, (n_in as isize, 1), x, (1, 1), T::one(), out);
}

pub(crate) fn dense_backward<T: Scalar>(
    x: &[T],
    weight: &[T],
    grad_out: &[T],
    grad_weight: &mut [T],
    grad_bias: &mut [T],
    grad_in: Option<&mut [T]>,
) {
    let (n_out, n_in) = (grad_out.len(), x.len());
    T::gemm(n_out, 1, n_in, grad_out, (1, 1), x, (1, 1), T::one(), grad_weight);
    for (gb, &g) in grad_bias.iter_mut().zip(grad_out) {
        *gb += g;
    }
    if let Some(gi) = grad_in {
        T::gemm(n_in, n_out, 1, weight, (1, n_in as isize), grad_out, (1, 1), T::zero(), gi);
    }
}

/// Numerically stable softmax cross-entropy: returns `−log p[label]` and
/// `p − onehot(label)`.
pub fn softmax_cross_entropy<T: Scalar>(logits: &[T], label: usize) -> (T, Vec<T>) {
    assert!(label < logits.len(), "label {label} out of range for {} logits", logits.len());
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    let loss = sum.ln() - (logits[label] - max);
    let mut grad: Vec<T> = exps.into_iter().map(|e| e / sum).collect();
    grad[label] -= T::one();
    (loss, grad)
}

pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

// ---- tensor-level API -------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2dGrads<T> {
    pub input: Tensor<T>,
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads<T> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

struct ConvGeom {
    c_in: usize,
    h: usize,
    w: usize,
    c_out: usize,
    k: usize,
}

fn conv_geometry<T: Scalar>(input: &Tensor<T>, kernels: &Tensor<T>, pad: usize) -> Result<ConvGeom> {
    let (c_in, h, w) = input.dims3("conv input")?;
    let (c_out, kc, k) = match *kernels.shape() {
        [co, ci, kh, kw] if kh == kw => (co, ci, kh),
        ref s => return Err(Error::Shape(format!("kernels must be C_out×C_in×k×k, got {s:?}"))),
    };
    if kc != c_in {
        return Err(Error::Shape(format!("kernels expect {kc} input channels, input has {c_in}")));
    }
    if k % 2 == 0 {
        return Err(Error::Shape(format!("kernel size must be odd, got {k}")));
    }
    if pad != (k - 1) / 2 {
        return Err(Error::Shape(format!("padding must be {} for a {k}×{k} kernel, got {pad}", (k - 1) / 2)));
    }
    Ok(ConvGeom { c_in, h, w, c_out, k })
}

/// Stride-1 same-size cross-correlation plus per-channel bias.
pub fn conv2d<T: Scalar>(input: &Tensor<T>, kernels: &Tensor<T>, bias: &Tensor<T>, pad: usize) -> Result<Tensor<T>> {
    let g = conv_geometry(input, kernels, pad)?;
    if bias.shape() != [g.c_out] {
        return Err(Error::Shape(format!("bias must have shape [{}], got {:?}", g.c_out, bias.shape())));
    }
    let (p, kk) = (g.h * g.w, g.c_in * g.k * g.k);
    let mut col = vec![T::zero(); kk * p];
    im2col(input.data(), g.c_in, g.h, g.w, g.k, pad, &mut col);
    let mut out = vec![T::zero(); g.c_out * p];
    conv_forward_cols(&col, kernels.data(), bias.data(), g.c_out, kk, p, &mut out);
    Tensor::new(vec![g.c_out, g.h, g.w], out)
}

pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    pad: usize,
    grad_out: &Tensor<T>,
) -> Result<Conv2dGrads<T>> {
    let g = conv_geometry(input, kernels, pad)?;
    if grad_out.shape() != [g.c_out, g.h, g.w] {
        return Err(Error::Shape(format!("output gradient shape {:?} does not match", grad_out.shape())));
    }
    let (p, kk) = (g.h * g.w, g.c_in * g.k * g.k);
    let mut col = vec![T::zero(); kk * p];
    im2col(input.data(), g.c_in, g.h, g.w, g.k, pad, &mut col);
    let mut gk = vec![T::zero(); g.c_out * kk];
    let mut gb = vec![T::zero(); g.c_out];
    let mut gcol = vec![T::zero(); kk * p];
    conv_backward_cols(&col, kernels.data(), grad_out.data(), g.c_out, kk, p, &mut gk, &mut gb, Some(&mut gcol));
    let mut gi = vec![T::zero(); g.c_in * p];
    col2im(&gcol, g.c_in, g.h, g.w, g.k, pad, &mut gi);
    Ok(Conv2dGrads {
        input: Tensor::new(input.shape().to_vec(), gi)?,
        kernels: Tensor::new(kernels.shape().to_vec(), gk)?,
        bias: Tensor::new(vec![g.c_out], gb)?,
    })
}

pub fn leaky_relu<T: Scalar>(x: &Tensor<T>, alpha: T) -> Tensor<T> {
    let mut out = Tensor::zeros(x.shape().to_vec());
    leaky_forward(x.data(), alpha, out.data_mut());
    out
}

pub fn leaky_relu_backward<T: Scalar>(x: &Tensor<T>, alpha: T, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if x.shape() != grad_out.shape() {
        return Err(Error::Shape("LeakyReLU gradient shape mismatch".into()));
    }
    let mut g = grad_out.clone();
    leaky_backward_inplace(x.data(), alpha, g.data_mut());
    Ok(g)
}

/// 2×2 stride-2 max pool. Returns the pooled tensor and the winning input
/// index per output.
pub fn maxpool2d<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    let (c, h, w) = input.dims3("pool input")?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Shape(format!("max pool needs even H and W, got {h}×{w}")));
    }
    let mut out = Tensor::zeros(vec![c, h / 2, w / 2]);
    let mut argmax = vec![0; out.len()];
    maxpool_forward(input.data(), c, h, w, out.data_mut(), &mut argmax);
    Ok((out, argmax))
}

pub fn maxpool2d_backward<T: Scalar>(input_shape: &[usize], argmax: &[usize], grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if argmax.len() != grad_out.len() {
        return Err(Error::Shape("pool gradient does not match argmax".into()));
    }
    let mut gi = Tensor::zeros(input_shape.to_vec());
    if argmax.iter().any(|&i| i >= gi.len()) {
        return Err(Error::Shape("argmax index outside input".into()));
    }
    maxpool_backward(grad_out.data(), argmax, gi.data_mut());
    Ok(gi)
}

fn dense_dims<T: Scalar>(x: &Tensor<T>, weights: &Tensor<T>) -> Result<(usize, usize)> {
    match *weights.shape() {
        [o, i] if i == x.len() => Ok((o, i)),
        ref s => Err(Error::Shape(format!("weights {s:?} do not accept an input of {}", x.len()))),
    }
}

/// `W·x + b` with `W` of shape (out, in).
pub fn dense<T: Scalar>(x: &Tensor<T>, weights: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let (o, _) = dense_dims(x, weights)?;
    if bias.len() != o {
        return Err(Error::Shape(format!("bias has {} entries, expected {o}", bias.len())));
    }
    let mut out = vec![T::zero(); o];
    dense_forward(x.data(), weights.data(), bias.data(), &mut out);
    Tensor::new(vec![o], out)
}

pub fn dense_backward_t<T: Scalar>(x: &Tensor<T>, weights: &Tensor<T>, grad_out: &Tensor<T>) -> Result<DenseGrads<T>> {
    let (o, i) = dense_dims(x, weights)?;
    if grad_out.len() != o {
        return Err(Error::Shape("dense output gradient mismatch".into()));
    }
    let mut gw = vec![T::zero(); o * i];
    let mut gb = vec![T::zero(); o];
    let mut gi = vec![T::zero(); i];
    dense_backward(x.data(), weights.data(), grad_out.data(), &mut gw, &mut gb, Some(&mut gi));
    Ok(DenseGrads {
        input: Tensor::new(x.shape().to_vec(), gi)?,
        weights: Tensor::new(vec![o, i], gw)?,
        bias: Tensor::new(vec![o], gb)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: Vec<usize>, data: Vec<f64>) -> Tensor<f64> {
        Tensor::new(shape, data).unwrap()
    }

    #[test]
    fn conv_all_ones() {
        let out = conv2d(&t(vec![1, 3, 3], vec![1.0; 9]), &t(vec![1, 1, 3, 3], vec![1.0; 9]), &t(vec![1], vec![0.0]), 1).unwrap();
        assert_eq!(out.data(), &[4.0, 6.0, 4.0, 6.0, 9.0, 6.0, 4.0, 6.0, 4.0]);
    }

    #[test]
    fn conv_identity_and_bias() {
        let input = t(vec![1, 4, 4], (0..16).map(f64::from).collect());
        let mut k = vec![0.0; 25];
        k[12] = 1.0;
        let out = conv2d(&input, &t(vec![1, 1, 5, 5], k), &t(vec![1], vec![0.0]), 2).unwrap();
        assert_eq!(out.data(), input.data());
        let out = conv2d(&input, &t(vec![1, 1, 5, 5], vec![0.0; 25]), &t(vec![1], vec![2.5]), 2).unwrap();
        assert!(out.data().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn conv_multichannel_hand_case() {
        // Two input channels, 1×1 kernel: weighted channel sum.
        let input = t(vec![2, 1, 2], vec![1.0, 2.0, 10.0, 20.0]);
        let out = conv2d(&input, &t(vec![1, 2, 1, 1], vec![1.0, 0.5]), &t(vec![1], vec![1.0]), 0).unwrap();
        assert_eq!(out.data(), &[7.0, 13.0]);
    }

    #[test]
    fn conv_shape_errors() {
        let input = t(vec![1, 3, 3], vec![0.0; 9]);
        let bias = t(vec![1], vec![0.0]);
        assert!(matches!(conv2d(&input, &t(vec![1, 2, 3, 3], vec![0.0; 18]), &bias, 1), Err(Error::Shape(_))));
        assert!(matches!(conv2d(&input, &t(vec![1, 1, 2, 2], vec![0.0; 4]), &bias, 0), Err(Error::Shape(_))));
        assert!(matches!(conv2d(&input, &t(vec![1, 1, 3, 3], vec![0.0; 9]), &bias, 0), Err(Error::Shape(_))));
        assert!(matches!(conv2d(&input, &t(vec![1, 1, 3, 3], vec![0.0; 9]), &t(vec![2], vec![0.0; 2]), 1), Err(Error::Shape(_))));
    }

    #[test]
    fn leaky() {
        let x = t(vec![4], vec![2.0, -2.0, 0.0, -0.5]);
        assert_eq!(leaky_relu(&x, 0.01).data(), &[2.0, -0.02, 0.0, -0.005]);
        assert_eq!(leaky_relu(&x, 0.0).data(), &[2.0, 0.0, 0.0, 0.0]);
        let g = leaky_relu_backward(&x, 0.01, &t(vec![4], vec![1.0; 4])).unwrap();
        assert_eq!(g.data(), &[1.0, 0.01, 0.01, 0.01]);
    }

    #[test]
    fn pool() {
        let (out, _) = maxpool2d(&t(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(out.data(), &[4.0]);
        let (out, _) = maxpool2d(&t(vec![1, 4, 4], (0..16).map(f64::from).collect())).unwrap();
        assert_eq!(out.data(), &[5.0, 7.0, 13.0, 15.0]);

        let constant = t(vec![1, 2, 2], vec![3.0; 4]);
        let (out, arg) = maxpool2d(&constant).unwrap();
        assert_eq!(out.data(), &[3.0]);
        let g = maxpool2d_backward(&[1, 2, 2], &arg, &t(vec![1, 1, 1], vec![1.0])).unwrap();
        assert_eq!(g.data(), &[1.0, 0.0, 0.0, 0.0]);

        assert!(matches!(maxpool2d(&t(vec![1, 3, 2], vec![0.0; 6])), Err(Error::Shape(_))));
    }

    #[test]
    fn dense_cases() {
        let x = t(vec![2], vec![1.0, 1.0]);
        let out = dense(&x, &t(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]), &t(vec![2], vec![0.0, 0.0])).unwrap();
        assert_eq!(out.data(), &[3.0, 7.0]);
        let out = dense(&t(vec![2], vec![5.0, -1.0]), &t(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]), &t(vec![2], vec![0.0; 2])).unwrap();
        assert_eq!(out.data(), &[5.0, -1.0]);
        let out = dense(&x, &t(vec![2, 2], vec![0.0; 4]), &t(vec![2], vec![1.0, 2.0])).unwrap();
        assert_eq!(out.data(), &[1.0, 2.0]);
        assert!(matches!(dense(&x, &t(vec![2, 3], vec![0.0; 6]), &t(vec![2], vec![0.0; 2])), Err(Error::Shape(_))));
    }

    #[test]
    fn cross_entropy() {
        let (loss, grad) = softmax_cross_entropy(&[0.0f64; 5], 3);
        assert!((loss - 5f64.ln()).abs() < 1e-12);
        assert!((grad.iter().sum::<f64>()).abs() < 1e-12);
        let (loss, grad) = softmax_cross_entropy(&[1000.0f32, 0.0, 0.0, 0.0, 0.0], 0);
        assert!(loss.is_finite() && loss.abs() < 1e-6);
        assert!(grad.iter().all(|g| g.is_finite()));
        let p = softmax(&[1.0f64, 2.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
