//! Gradient-based class activation maps and their ensemble.
//!
//! Every function takes the target-layer activation `A` and the class-score
//! gradient `G = ∂Y/∂A`, both `1 × K × h × w`, and works purely on those.
//!
//! The ensemble pipeline is fixed as
//! upsample → min-max normalize → pixel-wise mean of the three maps → keep
//! values at or above the top-10% cut.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mask::RetentionMask;
use crate::tensor::{Shape, Tensor};

/// Grad-CAM++ coefficients whose denominator magnitude falls below this are 0.
pub const ALPHA_GUARD: f64 = 1e-12;
/// Min-max normalization treats a smaller value range as a constant map.
pub const FLAT_RANGE: f64 = 1e-12;
/// Fraction of pixels kept by the ensemble threshold.
pub const ENSEMBLE_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    TargetLayer,
    Input,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Raw,
    /// Values in `[0, 1]`.
    Unit,
    /// Unit map with everything below the cut set to 0.
    Thresholded,
}

/// Single-channel heat map.
#[derive(Clone, Debug, PartialEq)]
pub struct Cam {
    height: usize,
    width: usize,
    values: Vec<f64>,
    resolution: Resolution,
    scale: Scale,
}

impl Cam {
    pub fn new(height: usize, width: usize, values: Vec<f64>, resolution: Resolution, scale: Scale) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::invalid(format!(
                "cam of {height}×{width} needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cam values"));
        }
        if scale != Scale::Raw && values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("unit-scaled cam has values outside [0, 1]"));
        }
        Ok(Cam {
            height,
            width,
            values,
            resolution,
            scale,
        })
    }

    /// Raw map at target-layer resolution.
    pub fn raw(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        Cam::new(height, width, values, Resolution::TargetLayer, Scale::Raw)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Row-major position of the first maximum.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        (best / self.width, best % self.width)
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }

    fn same_grid(&self, other: &Cam) -> bool {
        self.height == other.height && self.width == other.width && self.resolution == other.resolution
    }
}

/// Per-channel weights `w_k` of a weighted-activation CAM.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelWeights(pub Vec<f64>);

impl ChannelWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn check_pair(activation: &Tensor, gradient: &Tensor) -> Result<Shape> {
    activation.ensure_same_shape(gradient)?;
    let s = activation.shape();
    if s.batch != 1 || s.channels == 0 || s.plane() == 0 {
        return Err(Error::invalid(format!(
            "activation/gradient must be 1×K×h×w with K, h, w > 0, got {s}"
        )));
    }
    Ok(s)
}

/// Spatial mean of the gradient in each channel.
pub fn grad_cam_weights(activation: &Tensor, gradient: &Tensor) -> Result<ChannelWeights> {
    let s = check_pair(activation, gradient)?;
    let z = s.plane() as f64;
    Ok(ChannelWeights(
        (0..s.channels)
            .map(|k| gradient.plane(0, k).iter().sum::<f64>() / z)
            .collect(),
    ))
}

/// `w_k = Σ_ij α_ij · relu(G_ij)` with
/// `α_ij = G_ij² / (2·G_ij² + Σ_ab A_ab · G_ij³)`.
pub fn grad_cam_pp_weights(activation: &Tensor, gradient: &Tensor) -> Result<ChannelWeights> {
    let s = check_pair(activation, gradient)?;
    let weights = (0..s.channels)
        .map(|k| {
            let activation_sum: f64 = activation.plane(0, k).iter().sum();
            gradient
                .plane(0, k)
                .iter()
                .map(|&g| {
                    let g2 = g * g;
                    let denom = 2.0 * g2 + activation_sum * g2 * g;
                    let alpha = if denom.abs() < ALPHA_GUARD { 0.0 } else { g2 / denom };
                    alpha * g.max(0.0)
                })
                .sum::<f64>()
        })
        .collect();
    Ok(ChannelWeights(weights))
}

/// `Σ_k w_k · A_k`, before any rectification.
pub fn weighted_activation(activation: &Tensor, weights: &ChannelWeights) -> Result<Cam> {
    let s = activation.shape();
    if s.batch != 1 || weights.0.len() != s.channels {
        return Err(Error::ShapeMismatch {
            left: format!("activation {s}"),
            right: format!("{} channel weights", weights.0.len()),
        });
    }
    let mut out = vec![0.0; s.plane()];
    for (k, &w) in weights.0.iter().enumerate() {
        for (o, &a) in out.iter_mut().zip(activation.plane(0, k)) {
            *o += w * a;
        }
    }
    Cam::raw(s.height, s.width, out)
}

fn rectify(cam: Cam) -> Cam {
    Cam {
        values: cam.values.into_iter().map(|v| v.max(0.0)).collect(),
        ..cam
    }
}

/// Grad-CAM map before the final ReLU.
pub fn grad_cam_linear(activation: &Tensor, gradient: &Tensor) -> Result<Cam> {
    weighted_activation(activation, &grad_cam_weights(activation, gradient)?)
}

pub fn grad_cam(activation: &Tensor, gradient: &Tensor) -> Result<Cam> {
    grad_cam_linear(activation, gradient).map(rectify)
}

pub fn grad_cam_pp(activation: &Tensor, gradient: &Tensor) -> Result<Cam> {
    weighted_activation(activation, &grad_cam_pp_weights(activation, gradient)?).map(rectify)
}

/// `Σ_k G_k ⊙ A_k`. No rectification, so the raw map may be negative.
pub fn hires_cam(activation: &Tensor, gradient: &Tensor) -> Result<Cam> {
    let s = check_pair(activation, gradient)?;
    let mut out = vec![0.0; s.plane()];
    for k in 0..s.channels {
        for ((o, &a), &g) in out.iter_mut().zip(activation.plane(0, k)).zip(gradient.plane(0, k)) {
            *o += g * a;
        }
    }
    Cam::raw(s.height, s.width, out)
}

/// Corner-aligned bilinear resize: output corners reproduce input corners.
pub fn upsample_bilinear(cam: &Cam, out_h: usize, out_w: usize) -> Result<Cam> {
    if cam.is_empty() {
        return Err(Error::invalid("cannot upsample an empty cam"));
    }
    if out_h == 0 || out_w == 0 {
        return Err(Error::invalid(format!("target size {out_h}×{out_w} must be at least 1×1")));
    }
    let source = |i: usize, out: usize, len: usize| -> (usize, usize, f64) {
        if out == 1 || len == 1 {
            return (0, 0, 0.0);
        }
        let pos = (i * (len - 1)) as f64 / (out - 1) as f64;
        let lo = (pos.floor() as usize).min(len - 1);
        let hi = (lo + 1).min(len - 1);
        (lo, hi, pos - lo as f64)
    };
    let xs: Vec<_> = (0..out_w).map(|x| source(x, out_w, cam.width)).collect();
    let mut values = Vec::with_capacity(out_h * out_w);
    for y in 0..out_h {
        let (y0, y1, fy) = source(y, out_h, cam.height);
        for &(x0, x1, fx) in &xs {
            let top = (1.0 - fx) * cam.get(y0, x0) + fx * cam.get(y0, x1);
            let bottom = (1.0 - fx) * cam.get(y1, x0) + fx * cam.get(y1, x1);
            let mut v = (1.0 - fy) * top + fy * bottom;
            if cam.scale != Scale::Raw {
                v = v.clamp(0.0, 1.0);
            }
            values.push(v);
        }
    }
    Cam::new(out_h, out_w, values, Resolution::Input, cam.scale)
}

/// Min-max rescale to `[0, 1]`; a (near-)constant map becomes all zeros.
pub fn normalize_unit(cam: &Cam) -> Cam {
    let (lo, hi) = (cam.min(), cam.max());
    let range = hi - lo;
    let values = if cam.is_empty() || range < FLAT_RANGE {
        vec![0.0; cam.len()]
    } else {
        cam.values.iter().map(|&v| (v - lo) / range).collect()
    };
    Cam {
        values,
        scale: Scale::Unit,
        ..cam.clone()
    }
}

/// `(a + b + c) / 3`, written so that equal inputs come back unchanged.
#[inline]
fn mean3(a: f64, b: f64, c: f64) -> f64 {
    a + ((b - a) + (c - a)) / 3.0
}

/// Pixel-wise mean of three unit-normalized maps on the same grid.
pub fn average_cams(c1: &Cam, c2: &Cam, c3: &Cam) -> Result<Cam> {
    for c in [c1, c2, c3] {
        if c.scale != Scale::Unit {
            return Err(Error::invalid("average_cams needs unit-normalized inputs"));
        }
    }
    if !c1.same_grid(c2) || !c1.same_grid(c3) {
        return Err(Error::invalid(format!(
            "average_cams needs matching resolutions, got {}×{}, {}×{}, {}×{}",
            c1.height, c1.width, c2.height, c2.width, c3.height, c3.width
        )));
    }
    let values = c1
        .values
        .iter()
        .zip(&c2.values)
        .zip(&c3.values)
        .map(|((&a, &b), &c)| mean3(a, b, c))
        .collect();
    Ok(Cam {
        values,
        ..c1.clone()
    })
}

/// `floor(fraction · pixels)`. The small offset keeps products such as
/// `0.999 · 1000` from landing one below the intended integer.
pub fn top_count(pixels: usize, fraction: f64) -> usize {
    (fraction * pixels as f64 + 1e-9).floor() as usize
}

/// The `m`-th largest value (1-based).
fn kth_largest(values: &[f64], m: usize) -> f64 {
    let mut sorted = values.to_vec();
    let (_, kth, _) = sorted.select_nth_unstable_by(m - 1, |a, b| b.total_cmp(a));
    *kth
}

/// Cut value for keeping the top `fraction` of pixels: the `m`-th largest
/// value with `m = floor(fraction · P)`. Returns `(cut, m)`.
pub fn top_fraction_threshold(cam: &Cam, fraction: f64) -> Result<(f64, usize)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    let m = top_count(cam.len(), fraction);
    if m == 0 {
        return Err(Error::invalid(format!(
            "fraction {fraction} of {} pixels keeps nothing",
            cam.len()
        )));
    }
    Ok((kth_largest(&cam.values, m), m))
}

/// 90th-percentile cut of the map (see [`top_fraction_threshold`]).
pub fn percentile_threshold(cam: &Cam) -> Result<f64> {
    if cam.len() < 10 {
        return Err(Error::invalid(format!(
            "threshold needs at least 10 pixels, cam has {}",
            cam.len()
        )));
    }
    top_fraction_threshold(cam, ENSEMBLE_FRACTION).map(|(t, _)| t)
}

/// Zero every value below the 90th-percentile cut. Values equal to the cut
/// survive, so ties can keep more than `floor(0.1·P)` pixels.
pub fn apply_threshold(cam: &Cam) -> Result<Cam> {
    let t = percentile_threshold(cam)?;
    let values = cam
        .values
        .iter()
        .map(|&v| if v >= t { v } else { 0.0 })
        .collect();
    let scale = if cam.scale == Scale::Raw { Scale::Raw } else { Scale::Thresholded };
    Ok(Cam {
        values,
        scale,
        ..cam.clone()
    })
}

/// Pixels at or above the top-`fraction` cut.
pub fn top_fraction_mask(cam: &Cam, fraction: f64) -> Result<RetentionMask> {
    let (t, _) = top_fraction_threshold(cam, fraction)?;
    RetentionMask::new(cam.height, cam.width, cam.values.iter().map(|&v| v >= t).collect())
}

/// The three component maps, upsampled and unit-normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct CamParts {
    pub grad_cam: Cam,
    pub hires_cam: Cam,
    pub grad_cam_pp: Cam,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleCam {
    pub ensemble: Cam,
    pub average: Cam,
    pub parts: CamParts,
    pub threshold: f64,
}

impl EnsembleCam {
    /// Pixels that survived the threshold, including zero-valued ties.
    pub fn support(&self) -> RetentionMask {
        let bits = self.average.values.iter().map(|&v| v >= self.threshold).collect();
        RetentionMask::new(self.average.height, self.average.width, bits).expect("grid sizes agree")
    }
}

pub fn ensemble_cam(activation: &Tensor, gradient: &Tensor, input_h: usize, input_w: usize) -> Result<EnsembleCam> {
    let prepare = |raw: Cam| -> Result<Cam> { Ok(normalize_unit(&upsample_bilinear(&raw, input_h, input_w)?)) };
    let parts = CamParts {
        grad_cam: prepare(grad_cam(activation, gradient)?)?,
        hires_cam: prepare(hires_cam(activation, gradient)?)?,
        grad_cam_pp: prepare(grad_cam_pp(activation, gradient)?)?,
    };
    let average = average_cams(&parts.grad_cam, &parts.hires_cam, &parts.grad_cam_pp)?;
    let threshold = percentile_threshold(&average)?;
    let ensemble = apply_threshold(&average)?;
    Ok(EnsembleCam {
        ensemble,
        average,
        parts,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Rng;

    fn single(values: [f64; 4]) -> Tensor {
        Tensor::new(Shape::new(1, 1, 2, 2), values.to_vec()).unwrap()
    }

    fn unit(h: usize, w: usize, values: Vec<f64>) -> Cam {
        Cam::new(h, w, values, Resolution::Input, Scale::Unit).unwrap()
    }

    #[test]
    fn grad_cam_hand_examples() {
        let a = single([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(grad_cam(&a, &single([1.0; 4])).unwrap().values(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(grad_cam(&a, &single([-1.0; 4])).unwrap().values(), &[0.0; 4]);

        let s = Shape::new(1, 2, 2, 2);
        let a = Tensor::new(s, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        let g = Tensor::new(s, vec![0.4, 0.4, 0.4, 0.4, -0.1, -0.1, -0.1, -0.1]).unwrap();
        let out = grad_cam(&a, &g).unwrap();
        let expect = [0.4, 0.0, 0.0, 0.0];
        for (o, e) in out.values().iter().zip(expect) {
            assert!((o - e).abs() < 1e-15);
        }
    }

    #[test]
    fn hires_cam_hand_examples() {
        let a = single([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(hires_cam(&a, &single([4.0, 3.0, 2.0, 1.0])).unwrap().values(), &[4.0, 6.0, 6.0, 4.0]);
        assert_eq!(hires_cam(&a, &single([0.0; 4])).unwrap().values(), &[0.0; 4]);
    }

    #[test]
    fn hires_equals_linear_grad_cam_for_uniform_gradient() {
        let mut rng = Rng::new(1);
        let s = Shape::new(1, 4, 5, 3);
        let a = Tensor::uniform(s, 0.0, 2.0, &mut rng);
        let per_channel: Vec<f64> = (0..4).map(|_| rng.range(-1.0, 1.0)).collect();
        let g = Tensor::from_fn(s, |_, k, _, _| per_channel[k]).unwrap();
        let h = hires_cam(&a, &g).unwrap();
        let l = grad_cam_linear(&a, &g).unwrap();
        for (x, y) in h.values().iter().zip(l.values()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn grad_cam_pp_hand_example() {
        let out = grad_cam_pp(&single([1.0; 4]), &single([1.0; 4])).unwrap();
        for v in out.values() {
            assert!((v - 2.0 / 3.0).abs() < 1e-15);
        }
        let w = grad_cam_pp_weights(&single([1.0; 4]), &single([1.0; 4])).unwrap();
        assert!((w.0[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn grad_cam_pp_zero_gradient_guard() {
        let a = Tensor::uniform(Shape::new(1, 3, 4, 4), 0.0, 1.0, &mut Rng::new(2));
        let out = grad_cam_pp(&a, &Tensor::zeros(a.shape())).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grad_cam_pp_uniform_positive_gradient_shares_argmax() {
        let mut rng = Rng::new(3);
        for _ in 0..20 {
            let s = Shape::new(1, 1, 6, 6);
            let a = Tensor::uniform(s, 0.0, 1.0, &mut rng);
            let g = Tensor::filled(s, rng.range(0.1, 2.0));
            assert_eq!(grad_cam_pp(&a, &g).unwrap().argmax(), grad_cam(&a, &g).unwrap().argmax());
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = Tensor::zeros(Shape::new(1, 2, 3, 3));
        let g = Tensor::zeros(Shape::new(1, 2, 3, 4));
        assert!(grad_cam(&a, &g).is_err());
        assert!(hires_cam(&a, &g).is_err());
        assert!(grad_cam_pp(&a, &g).is_err());
        let batched = Tensor::zeros(Shape::new(2, 2, 3, 3));
        assert!(grad_cam(&batched, &batched).is_err());
    }

    #[test]
    fn upsample_examples() {
        let one = Cam::raw(1, 1, vec![5.0]).unwrap();
        assert_eq!(upsample_bilinear(&one, 4, 4).unwrap().values(), &[5.0; 16]);

        let sq = Cam::raw(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let up = upsample_bilinear(&sq, 3, 3).unwrap();
        assert_eq!(up.values(), &[0.0, 0.5, 1.0, 1.0, 1.5, 2.0, 2.0, 2.5, 3.0]);
        assert_eq!(up.resolution(), Resolution::Input);

        let mut rng = Rng::new(4);
        let r = Cam::raw(5, 7, (0..35).map(|_| rng.normal()).collect()).unwrap();
        assert_eq!(upsample_bilinear(&r, 5, 7).unwrap().values(), r.values());
        let big = upsample_bilinear(&r, 64, 64).unwrap();
        assert_eq!(big.get(0, 0), r.get(0, 0));
        assert_eq!(big.get(63, 63), r.get(4, 6));
        assert_eq!(big.get(0, 63), r.get(0, 6));
        assert_eq!(big.get(63, 0), r.get(4, 0));

        assert!(upsample_bilinear(&r, 0, 4).is_err());
        assert!(upsample_bilinear(&Cam::raw(0, 0, vec![]).unwrap(), 2, 2).is_err());
    }

    #[test]
    fn normalize_examples() {
        let c = Cam::raw(2, 2, vec![0.0, 2.0, 4.0, 8.0]).unwrap();
        assert_eq!(normalize_unit(&c).values(), &[0.0, 0.25, 0.5, 1.0]);
        let flat = Cam::raw(2, 2, vec![3.0; 4]).unwrap();
        assert_eq!(normalize_unit(&flat).values(), &[0.0; 4]);
        assert_eq!(normalize_unit(&flat).scale(), Scale::Unit);
    }

    #[test]
    fn average_examples() {
        let mut rng = Rng::new(5);
        let c = unit(3, 4, (0..12).map(|_| rng.uniform()).collect());
        assert_eq!(average_cams(&c, &c, &c).unwrap().values(), c.values());
        let z = unit(3, 4, vec![0.0; 12]);
        let avg = average_cams(&z, &z, &c).unwrap();
        for (a, b) in avg.values().iter().zip(c.values()) {
            assert!((a - b / 3.0).abs() < 1e-16);
        }
    }

    #[test]
    fn average_rejects_bad_inputs() {
        let c = unit(3, 4, vec![0.5; 12]);
        let raw = Cam::raw(3, 4, vec![0.5; 12]).unwrap();
        assert!(average_cams(&c, &c, &raw).is_err());
        let other = unit(4, 3, vec![0.5; 12]);
        assert!(average_cams(&c, &other, &c).is_err());
        let target = Cam::new(3, 4, vec![0.5; 12], Resolution::TargetLayer, Scale::Unit).unwrap();
        assert!(average_cams(&c, &c, &target).is_err());
    }

    #[test]
    fn threshold_examples() {
        let c = unit(4, 5, (1..=20).map(|v| v as f64 / 20.0).collect());
        let t = apply_threshold(&c).unwrap();
        let kept: Vec<f64> = t.values().iter().copied().filter(|&v| v != 0.0).collect();
        assert_eq!(kept, vec![19.0 / 20.0, 1.0]);
        assert_eq!(t.scale(), Scale::Thresholded);

        let flat = unit(4, 5, vec![0.3; 20]);
        assert_eq!(apply_threshold(&flat).unwrap().values(), flat.values());

        let distinct = unit(10, 10, (0..100).map(|v| v as f64 / 99.0).collect());
        assert_eq!(apply_threshold(&distinct).unwrap().nonzero_count(), 10);

        assert!(apply_threshold(&unit(3, 3, vec![0.1; 9])).is_err());
    }

    #[test]
    fn top_fraction_examples() {
        let c = Cam::new(2, 5, (1..=10).map(f64::from).collect(), Resolution::Input, Scale::Raw).unwrap();
        let m = top_fraction_mask(&c, 0.1).unwrap();
        assert_eq!(m.retained_count(), 1);
        assert!(m.is_set(1, 4));

        assert!(top_fraction_mask(&c, 1.0).is_err());
        assert!(top_fraction_mask(&c, 0.0).is_err());
        let big = Cam::new(1, 1000, (0..1000).map(f64::from).collect(), Resolution::Input, Scale::Raw).unwrap();
        assert_eq!(top_fraction_mask(&big, 0.999).unwrap().retained_count(), 999);
    }

    #[test]
    fn ensemble_of_zero_gradient_keeps_everything_as_zeros() {
        let a = Tensor::uniform(Shape::new(1, 4, 16, 16), 0.0, 1.0, &mut Rng::new(6));
        let e = ensemble_cam(&a, &Tensor::zeros(a.shape()), 64, 64).unwrap();
        assert!(e.ensemble.values().iter().all(|&v| v == 0.0));
        assert_eq!(e.threshold, 0.0);
        assert_eq!(e.support().retained_count(), 64 * 64);
    }

    #[test]
    fn ensemble_support_matches_top_fraction_of_average() {
        let mut rng = Rng::new(7);
        let s = Shape::new(1, 6, 16, 16);
        let a = Tensor::uniform(s, 0.0, 1.0, &mut rng);
        let g = Tensor::randn(s, 0.01, &mut rng);
        let e = ensemble_cam(&a, &g, 64, 64).unwrap();
        let mask = top_fraction_mask(&e.average, 0.1).unwrap();
        assert_eq!(e.support(), mask);
        let nonzero: Vec<bool> = e.ensemble.values().iter().map(|&v| v != 0.0).collect();
        assert_eq!(nonzero, mask.bits());
    }
}
