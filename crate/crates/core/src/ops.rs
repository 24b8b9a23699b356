//! Forward and backward primitives for the layers the classifier needs.
//!
//! Convolution is cross-correlation (no kernel flip). Kernels are stored as a
//! tensor of shape `out_channels × in_channels × kh × kw`; affine weights as
//! `out × in × 1 × 1`.
//!
//! Kink conventions: the ReLU subgradient at exactly 0 is 0, and max-pooling
//! ties route to the first element of the window in row-major order.

use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

/// Probability floor applied before taking the log in [`cross_entropy`].
pub const PROB_FLOOR: f64 = 1e-12;

/// Output spatial size for a convolution, or `None` if it would be empty.
pub fn conv_output_size(input: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    if stride == 0 || input + 2 * padding < kernel {
        return None;
    }
    Some((input + 2 * padding - kernel) / stride + 1)
}

/// Output positions `o` in `[lo, hi)` whose input index
/// `o·stride + k − padding` lands inside `[0, input)`.
#[inline]
fn valid_range(out: usize, input: usize, k: usize, stride: usize, padding: usize) -> (usize, usize) {
    let lo = if k >= padding {
        0
    } else {
        (padding - k).div_ceil(stride)
    };
    if input + padding <= k {
        return (0, 0);
    }
    let hi = ((input - 1 + padding - k) / stride + 1).min(out);
    (lo.min(hi), hi)
}

fn conv_shapes(input: Shape, kernels: Shape, bias_len: usize, stride: usize, padding: usize) -> Result<Shape> {
    if kernels.channels != input.channels {
        return Err(Error::shapes(input, kernels));
    }
    if bias_len != kernels.batch {
        return Err(Error::ShapeMismatch {
            left: format!("kernels {kernels}"),
            right: format!("bias of length {bias_len}"),
        });
    }
    if stride == 0 {
        return Err(Error::invalid("convolution stride must be positive"));
    }
    let oh = conv_output_size(input.height, kernels.height, stride, padding);
    let ow = conv_output_size(input.width, kernels.width, stride, padding);
    match (oh, ow) {
        (Some(oh), Some(ow)) => Ok(Shape::new(input.batch, kernels.batch, oh, ow)),
        _ => Err(Error::shapes(input, kernels)),
    }
}

pub fn conv2d(input: &Tensor, kernels: &Tensor, bias: &[f64], stride: usize, padding: usize) -> Result<Tensor> {
    let is = input.shape();
    let ks = kernels.shape();
    let os = conv_shapes(is, ks, bias.len(), stride, padding)?;
    let (ih, iw, oh, ow) = (is.height, is.width, os.height, os.width);
    let mut out = vec![0.0; os.len()];
    let x = input.data();
    let w = kernels.data();

    for n in 0..is.batch {
        for oc in 0..ks.batch {
            let out_plane = &mut out[(n * os.channels + oc) * oh * ow..][..oh * ow];
            out_plane.fill(bias[oc]);
            for ic in 0..is.channels {
                let in_plane = &x[(n * is.channels + ic) * ih * iw..][..ih * iw];
                for ky in 0..ks.height {
                    let (y_lo, y_hi) = valid_range(oh, ih, ky, stride, padding);
                    for kx in 0..ks.width {
                        let wv = w[((oc * ks.channels + ic) * ks.height + ky) * ks.width + kx];
                        let (x_lo, x_hi) = valid_range(ow, iw, kx, stride, padding);
                        if x_lo >= x_hi {
                            continue;
                        }
                        for oy in y_lo..y_hi {
                            let iy = oy * stride + ky - padding;
                            let row_out = &mut out_plane[oy * ow..][x_lo..x_hi];
                            let row_in = &in_plane[iy * iw..][..iw];
                            if stride == 1 {
                                let src = &row_in[x_lo + kx - padding..][..x_hi - x_lo];
                                for (o, i) in row_out.iter_mut().zip(src) {
                                    *o += wv * i;
                                }
                            } else {
                                for (j, o) in row_out.iter_mut().enumerate() {
                                    *o += wv * row_in[(x_lo + j) * stride + kx - padding];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(Tensor::from_parts(os, out))
}

/// Gradients of a scalar `⟨grad_out, conv2d(input, kernels, bias)⟩`.
#[derive(Clone, Debug)]
pub struct ConvGrads {
    /// `None` when the caller asked to skip it (first layer of a network).
    pub input: Option<Tensor>,
    pub kernels: Tensor,
    pub bias: Vec<f64>,
}

pub fn conv2d_backward(
    grad_out: &Tensor,
    input: &Tensor,
    kernels: &Tensor,
    stride: usize,
    padding: usize,
) -> Result<ConvGrads> {
    conv2d_backward_impl(grad_out, input, kernels, stride, padding, true)
}

/// Like [`conv2d_backward`] but without the input gradient.
pub fn conv2d_backward_params(
    grad_out: &Tensor,
    input: &Tensor,
    kernels: &Tensor,
    stride: usize,
    padding: usize,
) -> Result<ConvGrads> {
    conv2d_backward_impl(grad_out, input, kernels, stride, padding, false)
}

fn conv2d_backward_impl(
    grad_out: &Tensor,
    input: &Tensor,
    kernels: &Tensor,
    stride: usize,
    padding: usize,
    with_input: bool,
) -> Result<ConvGrads> {
    let is = input.shape();
    let ks = kernels.shape();
    let os = conv_shapes(is, ks, ks.batch, stride, padding)?;
    if grad_out.shape() != os {
        return Err(Error::shapes(grad_out.shape(), os));
    }
    let (ih, iw, oh, ow) = (is.height, is.width, os.height, os.width);
    let x = input.data();
    let w = kernels.data();
    let g = grad_out.data();
    let mut gx = if with_input { vec![0.0; is.len()] } else { Vec::new() };
    let mut gw = vec![0.0; ks.len()];
    let mut gb = vec![0.0; ks.batch];

    for n in 0..is.batch {
        for oc in 0..ks.batch {
            let g_plane = &g[(n * os.channels + oc) * oh * ow..][..oh * ow];
            gb[oc] += g_plane.iter().sum::<f64>();
            for ic in 0..is.channels {
                let in_off = (n * is.channels + ic) * ih * iw;
                let in_plane = &x[in_off..][..ih * iw];
                for ky in 0..ks.height {
                    let (y_lo, y_hi) = valid_range(oh, ih, ky, stride, padding);
                    for kx in 0..ks.width {
                        let widx = ((oc * ks.channels + ic) * ks.height + ky) * ks.width + kx;
                        let wv = w[widx];
                        let (x_lo, x_hi) = valid_range(ow, iw, kx, stride, padding);
                        if x_lo >= x_hi {
                            continue;
                        }
                        let mut acc = 0.0;
                        for oy in y_lo..y_hi {
                            let iy = oy * stride + ky - padding;
                            let row_g = &g_plane[oy * ow..][x_lo..x_hi];
                            if stride == 1 {
                                let start = iy * iw + x_lo + kx - padding;
                                let len = x_hi - x_lo;
                                let row_in = &in_plane[start..][..len];
                                for (gv, i) in row_g.iter().zip(row_in) {
                                    acc += gv * i;
                                }
                                if with_input {
                                    let row_gx = &mut gx[in_off + start..][..len];
                                    for (d, gv) in row_gx.iter_mut().zip(row_g) {
                                        *d += wv * gv;
                                    }
                                }
                            } else {
                                for (j, gv) in row_g.iter().enumerate() {
                                    let ix = (x_lo + j) * stride + kx - padding;
                                    acc += gv * in_plane[iy * iw + ix];
                                    if with_input {
                                        gx[in_off + iy * iw + ix] += wv * gv;
                                    }
                                }
                            }
                        }
                        gw[widx] += acc;
                    }
                }
            }
        }
    }
    Ok(ConvGrads {
        input: with_input.then(|| Tensor::from_parts(is, gx)),
        kernels: Tensor::from_parts(ks, gw),
        bias: gb,
    })
}

pub fn relu(input: &Tensor) -> Tensor {
    let data = input.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::from_parts(input.shape(), data)
}

/// Passes `grad_out` where `input > 0`. `input` may be either the pre- or
/// post-activation tensor; both give the same mask.
pub fn relu_backward(grad_out: &Tensor, input: &Tensor) -> Result<Tensor> {
    grad_out.ensure_same_shape(input)?;
    let data = grad_out
        .data()
        .iter()
        .zip(input.data())
        .map(|(&g, &x)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Ok(Tensor::from_parts(input.shape(), data))
}

/// Argmax bookkeeping from [`maxpool2`]: for each output element, the flat
/// index of the winning input element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolIndices {
    input_shape: Shape,
    output_shape: Shape,
    argmax: Vec<usize>,
}

impl PoolIndices {
    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

/// 2×2 max pooling with stride 2.
pub fn maxpool2(input: &Tensor) -> Result<(Tensor, PoolIndices)> {
    let s = input.shape();
    if !s.height.is_multiple_of(2) || !s.width.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "maxpool2 needs even spatial dims, got {s}"
        )));
    }
    let os = Shape::new(s.batch, s.channels, s.height / 2, s.width / 2);
    let x = input.data();
    let mut out = Vec::with_capacity(os.len());
    let mut argmax = Vec::with_capacity(os.len());
    for n in 0..s.batch {
        for c in 0..s.channels {
            let base = (n * s.channels + c) * s.plane();
            for oy in 0..os.height {
                for ox in 0..os.width {
                    let top = base + 2 * oy * s.width + 2 * ox;
                    let candidates = [top, top + 1, top + s.width, top + s.width + 1];
                    let mut best = candidates[0];
                    for &idx in &candidates[1..] {
                        // strict: earlier index wins ties
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                    out.push(x[best]);
                    argmax.push(best);
                }
            }
        }
    }
    Ok((
        Tensor::from_parts(os, out),
        PoolIndices {
            input_shape: s,
            output_shape: os,
            argmax,
        },
    ))
}

pub fn maxpool2_backward(grad_out: &Tensor, indices: &PoolIndices) -> Result<Tensor> {
    if grad_out.shape() != indices.output_shape {
        return Err(Error::shapes(grad_out.shape(), indices.output_shape));
    }
    let mut gx = vec![0.0; indices.input_shape.len()];
    for (&g, &idx) in grad_out.data().iter().zip(&indices.argmax) {
        gx[idx] += g;
    }
    Ok(Tensor::from_parts(indices.input_shape, gx))
}

/// Mean over each `height × width` plane; output is `batch × channels × 1 × 1`.
pub fn global_avg_pool(input: &Tensor) -> Tensor {
    let s = input.shape();
    let p = s.plane() as f64;
    let data = input
        .data()
        .chunks(s.plane().max(1))
        .take(s.batch * s.channels)
        .map(|plane| plane.iter().sum::<f64>() / p)
        .collect();
    Tensor::from_parts(Shape::new(s.batch, s.channels, 1, 1), data)
}

pub fn global_avg_pool_backward(grad_out: &Tensor, input_shape: Shape) -> Result<Tensor> {
    let expect = Shape::new(input_shape.batch, input_shape.channels, 1, 1);
    if grad_out.shape() != expect {
        return Err(Error::shapes(grad_out.shape(), expect));
    }
    let p = input_shape.plane();
    let mut gx = Vec::with_capacity(input_shape.len());
    for &g in grad_out.data() {
        let v = g / p as f64;
        gx.extend(std::iter::repeat_n(v, p));
    }
    Ok(Tensor::from_parts(input_shape, gx))
}

fn affine_check(input_len: usize, weights: &Tensor, bias_len: usize) -> Result<(usize, usize)> {
    let ws = weights.shape();
    if ws.height != 1 || ws.width != 1 || ws.channels != input_len || ws.batch != bias_len {
        return Err(Error::ShapeMismatch {
            left: format!("weights {ws}, bias of length {bias_len}"),
            right: format!("input of length {input_len}"),
        });
    }
    Ok((ws.batch, ws.channels))
}

/// `weights · input + bias`.
pub fn affine(input: &[f64], weights: &Tensor, bias: &[f64]) -> Result<Vec<f64>> {
    let (rows, cols) = affine_check(input.len(), weights, bias.len())?;
    let w = weights.data();
    Ok((0..rows)
        .map(|r| {
            bias[r]
                + w[r * cols..(r + 1) * cols]
                    .iter()
                    .zip(input)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct AffineGrads {
    pub input: Vec<f64>,
    pub weights: Tensor,
    pub bias: Vec<f64>,
}

pub fn affine_backward(grad_out: &[f64], input: &[f64], weights: &Tensor) -> Result<AffineGrads> {
    let (rows, cols) = affine_check(input.len(), weights, grad_out.len())?;
    let w = weights.data();
    let mut gx = vec![0.0; cols];
    let mut gw = vec![0.0; rows * cols];
    for r in 0..rows {
        let g = grad_out[r];
        for c in 0..cols {
            gx[c] += w[r * cols + c] * g;
            gw[r * cols + c] = g * input[c];
        }
    }
    Ok(AffineGrads {
        input: gx,
        weights: Tensor::from_parts(weights.shape(), gw),
        bias: grad_out.to_vec(),
    })
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Vector-Jacobian product of softmax: `p ⊙ (g − ⟨g, p⟩)`.
pub fn softmax_backward(grad_probs: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    if grad_probs.len() != probs.len() {
        return Err(Error::ShapeMismatch {
            left: format!("gradient of length {}", grad_probs.len()),
            right: format!("probabilities of length {}", probs.len()),
        });
    }
    let dot: f64 = grad_probs.iter().zip(probs).map(|(g, p)| g * p).sum();
    Ok(probs
        .iter()
        .zip(grad_probs)
        .map(|(p, g)| p * (g - dot))
        .collect())
}

/// Negative natural log of the label's probability, floored at [`PROB_FLOOR`].
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = probs
        .get(label)
        .ok_or_else(|| Error::invalid(format!("label {label} out of range for {} classes", probs.len())))?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// Gradient of [`cross_entropy`] with respect to the probabilities.
pub fn cross_entropy_backward(probs: &[f64], label: usize) -> Result<Vec<f64>> {
    let p = *probs
        .get(label)
        .ok_or_else(|| Error::invalid(format!("label {label} out of range for {} classes", probs.len())))?;
    let mut g = vec![0.0; probs.len()];
    if p > PROB_FLOOR {
        g[label] = -1.0 / p;
    }
    Ok(g)
}

/// Fused gradient of `cross_entropy(softmax(z))` with respect to `z`.
pub fn softmax_cross_entropy_backward(probs: &[f64], label: usize) -> Result<Vec<f64>> {
    if label >= probs.len() {
        return Err(Error::invalid(format!("label {label} out of range for {} classes", probs.len())));
    }
    Ok(probs
        .iter()
        .enumerate()
        .map(|(i, &p)| if i == label { p - 1.0 } else { p })
        .collect())
}
