//! Independent oracles shared by the integration tests and the acceptance
//! run: straight-line reimplementations written from the formulas, and a
//! central-difference gradient checker.

#![allow(dead_code)]
// oracles index on purpose; plain loops read closest to the formulas
#![allow(clippy::needless_range_loop)]

use ensemble_cam::model::TrainConfig;
use ensemble_cam::ops;
use ensemble_cam::{Label, Rng, Sample, Shape, SmallCnn, Tensor};

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-6;
pub const KINK_MARGIN: f64 = 1e-3;
/// Denominator floor for the relative error. Rounding in an O(1) layer output
/// puts ~1e-10 of noise on a central difference at h = 1e-5, so relative error
/// is not resolvable for tiny entries; those are held to |a − n| ≤ 1e-9.
pub const FD_FLOOR: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Default)]
pub struct FdStats {
    pub checked: usize,
    pub skipped: usize,
    pub worst: f64,
}

impl FdStats {
    pub fn merge(&mut self, other: FdStats) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        self.worst = self.worst.max(other.worst);
    }
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR)
}

/// Compares `analytic[i]` with `(f(x + h e_i) − f(x − h e_i)) / 2h` for each
/// `i` in `coords`. `skip(i, x_plus, x_minus)` can drop coordinates whose
/// perturbation crosses a kink.
pub fn fd_check(
    f: impl Fn(&[f64]) -> f64,
    x: &[f64],
    analytic: &[f64],
    coords: impl IntoIterator<Item = usize>,
    skip: impl Fn(usize, &[f64], &[f64]) -> bool,
) -> FdStats {
    assert_eq!(x.len(), analytic.len());
    let mut stats = FdStats::default();
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    for i in coords {
        plus[i] = x[i] + FD_STEP;
        minus[i] = x[i] - FD_STEP;
        if skip(i, &plus, &minus) {
            stats.skipped += 1;
        } else {
            let numeric = (f(&plus) - f(&minus)) / (2.0 * FD_STEP);
            stats.worst = stats.worst.max(rel_err(analytic[i], numeric));
            stats.checked += 1;
        }
        plus[i] = x[i];
        minus[i] = x[i];
    }
    stats
}

fn distinct(count: usize, len: usize, rng: &mut Rng) -> Vec<usize> {
    let mut v: Vec<usize> = (0..count).map(|_| rng.below(len)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Compensated dot product (error-free products and sums), accurate to
/// about twice working precision so it adds no noise to the differences.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let p = x * y;
        let pe = x.mul_add(y, -p);
        let t = s + p;
        let z = t - s;
        c += (s - (t - z)) + (p - z) + pe;
        s = t;
    }
    s + c
}

pub fn tensor(shape: Shape, data: &[f64]) -> Tensor {
    Tensor::new(shape, data.to_vec()).unwrap()
}

/// Values drawn from N(0, 1), pushed at least `margin` away from zero.
pub fn away_from_zero(n: usize, margin: f64, rng: &mut Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let v = rng.normal();
            if v.abs() < margin {
                margin.copysign(v) * 2.0
            } else {
                v
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Layer-by-layer gradient checks over randomized configurations.

fn conv_config(rng: &mut Rng) -> FdStats {
    let n = 1 + rng.below(2);
    let cin = 1 + rng.below(3);
    let cout = 1 + rng.below(3);
    let k = 1 + rng.below(3);
    let stride = 1 + rng.below(2);
    let pad = rng.below(k.min(2) + 1);
    let h = k + rng.below(5);
    let w = k + rng.below(5);
    let xs = Shape::new(n, cin, h, w);
    let ks = Shape::new(cout, cin, k, k);
    let x: Vec<f64> = (0..xs.len()).map(|_| rng.normal()).collect();
    let kern: Vec<f64> = (0..ks.len()).map(|_| rng.normal()).collect();
    let bias: Vec<f64> = (0..cout).map(|_| rng.normal()).collect();
    let out = ops::conv2d(&tensor(xs, &x), &tensor(ks, &kern), &bias, stride, pad).unwrap();
    let r: Vec<f64> = (0..out.len()).map(|_| rng.normal()).collect();
    let grads = ops::conv2d_backward(&tensor(out.shape(), &r), &tensor(xs, &x), &tensor(ks, &kern), stride, pad).unwrap();

    let never = |_: usize, _: &[f64], _: &[f64]| false;
    let mut stats = fd_check(
        |x| dot(&r, ops::conv2d(&tensor(xs, x), &tensor(ks, &kern), &bias, stride, pad).unwrap().data()),
        &x,
        grads.input.as_ref().unwrap().data(),
        0..x.len(),
        never,
    );
    stats.merge(fd_check(
        |kv| dot(&r, ops::conv2d(&tensor(xs, &x), &tensor(ks, kv), &bias, stride, pad).unwrap().data()),
        &kern,
        grads.kernels.data(),
        0..kern.len(),
        never,
    ));
    stats.merge(fd_check(
        |b| dot(&r, ops::conv2d(&tensor(xs, &x), &tensor(ks, &kern), b, stride, pad).unwrap().data()),
        &bias,
        &grads.bias,
        0..bias.len(),
        never,
    ));
    stats
}

fn relu_config(rng: &mut Rng) -> FdStats {
    let s = Shape::new(1 + rng.below(2), 1 + rng.below(3), 2 + rng.below(5), 2 + rng.below(5));
    let x = away_from_zero(s.len(), KINK_MARGIN, rng);
    let r: Vec<f64> = (0..s.len()).map(|_| rng.normal()).collect();
    let g = ops::relu_backward(&tensor(s, &r), &tensor(s, &x)).unwrap();
    fd_check(
        |x| dot(&r, ops::relu(&tensor(s, x)).data()),
        &x,
        g.data(),
        0..x.len(),
        |_, _, _| false,
    )
}

fn maxpool_config(rng: &mut Rng) -> FdStats {
    let s = Shape::new(1 + rng.below(2), 1 + rng.below(3), 2 * (1 + rng.below(3)), 2 * (1 + rng.below(3)));
    // Distinct values on a coarse lattice keep every window's winner at least
    // KINK_MARGIN ahead of the runner-up.
    let mut x: Vec<f64> = (0..s.len()).map(|i| i as f64 * 2.0 * KINK_MARGIN).collect();
    for i in (1..x.len()).rev() {
        x.swap(i, rng.below(i + 1));
    }
    let (out, idx) = ops::maxpool2(&tensor(s, &x)).unwrap();
    let r: Vec<f64> = (0..out.len()).map(|_| rng.normal()).collect();
    let g = ops::maxpool2_backward(&tensor(out.shape(), &r), &idx).unwrap();
    fd_check(
        |x| dot(&r, ops::maxpool2(&tensor(s, x)).unwrap().0.data()),
        &x,
        g.data(),
        0..x.len(),
        |_, _, _| false,
    )
}

fn gap_config(rng: &mut Rng) -> FdStats {
    let s = Shape::new(1 + rng.below(2), 1 + rng.below(4), 1 + rng.below(6), 1 + rng.below(6));
    let x: Vec<f64> = (0..s.len()).map(|_| rng.normal()).collect();
    let r: Vec<f64> = (0..s.batch * s.channels).map(|_| rng.normal()).collect();
    let g = ops::global_avg_pool_backward(&tensor(Shape::new(s.batch, s.channels, 1, 1), &r), s).unwrap();
    fd_check(
        |x| dot(&r, ops::global_avg_pool(&tensor(s, x)).data()),
        &x,
        g.data(),
        0..x.len(),
        |_, _, _| false,
    )
}

fn affine_config(rng: &mut Rng) -> FdStats {
    let (rows, cols) = (1 + rng.below(4), 1 + rng.below(6));
    let ws = Shape::new(rows, cols, 1, 1);
    let x: Vec<f64> = (0..cols).map(|_| rng.normal()).collect();
    let w: Vec<f64> = (0..ws.len()).map(|_| rng.normal()).collect();
    let b: Vec<f64> = (0..rows).map(|_| rng.normal()).collect();
    let r: Vec<f64> = (0..rows).map(|_| rng.normal()).collect();
    let g = ops::affine_backward(&r, &x, &tensor(ws, &w)).unwrap();
    let never = |_: usize, _: &[f64], _: &[f64]| false;
    let mut stats = fd_check(
        |x| dot(&r, &ops::affine(x, &tensor(ws, &w), &b).unwrap()),
        &x,
        &g.input,
        0..cols,
        never,
    );
    stats.merge(fd_check(
        |w| dot(&r, &ops::affine(&x, &tensor(ws, w), &b).unwrap()),
        &w,
        g.weights.data(),
        0..w.len(),
        never,
    ));
    stats.merge(fd_check(
        |b| dot(&r, &ops::affine(&x, &tensor(ws, &w), b).unwrap()),
        &b,
        &g.bias,
        0..rows,
        never,
    ));
    stats
}

fn softmax_config(rng: &mut Rng) -> FdStats {
    let n = 2 + rng.below(4);
    let z: Vec<f64> = (0..n).map(|_| 2.0 * rng.normal()).collect();
    let r: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let g = ops::softmax_backward(&r, &ops::softmax(&z)).unwrap();
    fd_check(|z| dot(&r, &ops::softmax(z)), &z, &g, 0..n, |_, _, _| false)
}

fn cross_entropy_config(rng: &mut Rng) -> FdStats {
    let n = 2 + rng.below(4);
    let p: Vec<f64> = (0..n).map(|_| rng.range(0.05, 1.0)).collect();
    let label = rng.below(n);
    let g = ops::cross_entropy_backward(&p, label).unwrap();
    fd_check(
        |p| ops::cross_entropy(p, label).unwrap(),
        &p,
        &g,
        0..n,
        |_, _, _| false,
    )
}

fn fused_config(rng: &mut Rng) -> FdStats {
    let n = 2 + rng.below(4);
    let z: Vec<f64> = (0..n).map(|_| 2.0 * rng.normal()).collect();
    let label = rng.below(n);
    let g = ops::softmax_cross_entropy_backward(&ops::softmax(&z), label).unwrap();
    fd_check(
        |z| ops::cross_entropy(&ops::softmax(z), label).unwrap(),
        &z,
        &g,
        0..n,
        |_, _, _| false,
    )
}

fn class_gradient_config(rng: &mut Rng) -> FdStats {
    let model = SmallCnn::init(rng);
    let image = Tensor::uniform(ensemble_cam::model::INPUT_SHAPE, 0.0, 1.0, rng);
    let trace = model.forward(&image).unwrap();
    let class = rng.below(2);
    let g = model.class_gradients(&trace, class).unwrap();
    let a = trace.conv3.data().to_vec();
    let shape = trace.conv3.shape();
    let coords = distinct(64, a.len(), rng);
    fd_check(
        |a| model.head_logits(&tensor(shape, a)).unwrap()[class],
        &a,
        g.data(),
        coords,
        |_, _, _| false,
    )
}

/// `model` with parameter tensor `slot` (in `params()` order) replaced.
pub fn with_params(model: &SmallCnn, slot: usize, data: &[f64]) -> SmallCnn {
    let mut m = model.clone();
    let set_t = |t: &mut Tensor| *t = tensor(t.shape(), data);
    match slot {
        0 => set_t(&mut m.conv1.weight),
        1 => m.conv1.bias = data.to_vec(),
        2 => set_t(&mut m.conv2.weight),
        3 => m.conv2.bias = data.to_vec(),
        4 => set_t(&mut m.conv3.weight),
        5 => m.conv3.bias = data.to_vec(),
        6 => set_t(&mut m.fc.weight),
        7 => m.fc.bias = data.to_vec(),
        _ => unreachable!(),
    }
    m
}

/// ReLU on/off pattern of every hidden layer plus the pooling winners.
fn activation_pattern(model: &SmallCnn, image: &Tensor) -> (Vec<bool>, Vec<usize>) {
    let t = model.forward(image).unwrap();
    let mut on = Vec::new();
    for layer in [&t.conv1, &t.conv2, &t.conv3] {
        on.extend(layer.data().iter().map(|&v| v > 0.0));
    }
    let mut winners = ops::maxpool2(&t.conv1).unwrap().1.argmax().to_vec();
    winners.extend_from_slice(ops::maxpool2(&t.conv2).unwrap().1.argmax());
    (on, winners)
}

fn model_loss_config(rng: &mut Rng) -> FdStats {
    let model = SmallCnn::init(rng);
    let image = Tensor::uniform(ensemble_cam::model::INPUT_SHAPE, 0.0, 1.0, rng);
    let label = Label::from_index(rng.below(2)).unwrap();
    let trace = model.forward(&image).unwrap();
    let (_, grads) = model.loss_gradients(&trace, label).unwrap();
    let base_pattern = activation_pattern(&model, &image);
    let loss = |m: &SmallCnn| ops::cross_entropy(&m.forward(&image).unwrap().probabilities, label.index()).unwrap();

    let mut stats = FdStats::default();
    for slot in 0..8 {
        let x = model.params()[slot].to_vec();
        let coords = distinct(6, x.len(), rng);
        stats.merge(fd_check(
            |p| loss(&with_params(&model, slot, p)),
            &x,
            grads.params()[slot],
            coords,
            |_, plus, minus| {
                activation_pattern(&with_params(&model, slot, plus), &image) != base_pattern
                    || activation_pattern(&with_params(&model, slot, minus), &image) != base_pattern
            },
        ));
    }
    stats
}

#[derive(Clone, Debug)]
pub struct GradSuite {
    pub configs: usize,
    pub stats: FdStats,
    /// `(layer, worst relative error)` for each configuration.
    pub per_config: Vec<(&'static str, f64)>,
}

/// Randomized gradient checks over every hand-written backward.
pub fn gradient_suite(seed: u64) -> GradSuite {
    type Case = (&'static str, usize, fn(&mut Rng) -> FdStats);
    let plan: [Case; 10] = [
        ("conv2d", 40, conv_config),
        ("relu", 12, relu_config),
        ("maxpool2", 12, maxpool_config),
        ("global_avg_pool", 8, gap_config),
        ("affine", 10, affine_config),
        ("softmax", 6, softmax_config),
        ("cross_entropy", 4, cross_entropy_config),
        ("softmax_cross_entropy", 6, fused_config),
        ("class_gradients", 4, class_gradient_config),
        ("model loss", 4, model_loss_config),
    ];
    let mut suite = GradSuite { configs: 0, stats: FdStats::default(), per_config: Vec::new() };
    for (stream, (name, count, run)) in plan.into_iter().enumerate() {
        let mut rng = Rng::for_stream(seed, stream as u64);
        for _ in 0..count {
            let s = run(&mut rng);
            suite.per_config.push((name, s.worst));
            suite.stats.merge(s);
            suite.configs += 1;
        }
    }
    suite
}

// ---------------------------------------------------------------------------
// Straight-line forward pass of the network.

fn naive_conv_relu(x: &[Vec<Vec<f64>>], w: &Tensor, b: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let (cout, cin) = (w.shape().batch, w.shape().channels);
    let (h, wd) = (x[0].len(), x[0][0].len());
    let mut out = vec![vec![vec![0.0; wd]; h]; cout];
    for o in 0..cout {
        for i in 0..h {
            for j in 0..wd {
                let mut acc = b[o];
                for c in 0..cin {
                    for di in 0..3 {
                        for dj in 0..3 {
                            let (yi, xj) = (i as isize + di as isize - 1, j as isize + dj as isize - 1);
                            if yi >= 0 && xj >= 0 && (yi as usize) < h && (xj as usize) < wd {
                                acc += w.get(o, c, di, dj) * x[c][yi as usize][xj as usize];
                            }
                        }
                    }
                }
                out[o][i][j] = if acc > 0.0 { acc } else { 0.0 };
            }
        }
    }
    out
}

fn naive_pool(x: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    x.iter()
        .map(|plane| {
            (0..plane.len() / 2)
                .map(|i| {
                    (0..plane[0].len() / 2)
                        .map(|j| {
                            let mut m = plane[2 * i][2 * j];
                            for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                                if plane[2 * i + di][2 * j + dj] > m {
                                    m = plane[2 * i + di][2 * j + dj];
                                }
                            }
                            m
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `(conv3 activation as [k][i][j], logits)` computed with plain loops.
pub fn naive_forward(model: &SmallCnn, image: &Tensor) -> (Vec<Vec<Vec<f64>>>, [f64; 2]) {
    let s = image.shape();
    let x: Vec<Vec<Vec<f64>>> = (0..s.channels)
        .map(|c| (0..s.height).map(|i| (0..s.width).map(|j| image.get(0, c, i, j)).collect()).collect())
        .collect();
    let a1 = naive_pool(&naive_conv_relu(&x, &model.conv1.weight, &model.conv1.bias));
    let a2 = naive_pool(&naive_conv_relu(&a1, &model.conv2.weight, &model.conv2.bias));
    let a3 = naive_conv_relu(&a2, &model.conv3.weight, &model.conv3.bias);
    let pooled: Vec<f64> = a3
        .iter()
        .map(|p| p.iter().flatten().sum::<f64>() / (p.len() * p[0].len()) as f64)
        .collect();
    let mut logits = [0.0; 2];
    for (c, l) in logits.iter_mut().enumerate() {
        *l = model.fc.bias[c];
        for (k, v) in pooled.iter().enumerate() {
            *l += model.fc.weight.get(c, k, 0, 0) * v;
        }
    }
    (a3, logits)
}

// ---------------------------------------------------------------------------
// Straight-line map formulas on `[k][i][j]` arrays.

pub type Planes = Vec<Vec<Vec<f64>>>;

pub fn planes(t: &Tensor) -> Planes {
    let s = t.shape();
    (0..s.channels)
        .map(|k| (0..s.height).map(|i| (0..s.width).map(|j| t.get(0, k, i, j)).collect()).collect())
        .collect()
}

fn combine(a: &Planes, w: &[f64], relu: bool) -> Vec<f64> {
    let (h, wd) = (a[0].len(), a[0][0].len());
    let mut out = Vec::with_capacity(h * wd);
    for i in 0..h {
        for j in 0..wd {
            let mut v = 0.0;
            for k in 0..a.len() {
                v += w[k] * a[k][i][j];
            }
            out.push(if relu && v < 0.0 { 0.0 } else { v });
        }
    }
    out
}

pub fn oracle_grad_cam_weights(g: &Planes) -> Vec<f64> {
    g.iter()
        .map(|p| {
            let z = (p.len() * p[0].len()) as f64;
            p.iter().flatten().sum::<f64>() / z
        })
        .collect()
}

pub fn oracle_grad_cam(a: &Planes, g: &Planes) -> Vec<f64> {
    combine(a, &oracle_grad_cam_weights(g), true)
}

pub fn oracle_hires_cam(a: &Planes, g: &Planes) -> Vec<f64> {
    let (h, wd) = (a[0].len(), a[0][0].len());
    let mut out = vec![0.0; h * wd];
    for k in 0..a.len() {
        for i in 0..h {
            for j in 0..wd {
                out[i * wd + j] += g[k][i][j] * a[k][i][j];
            }
        }
    }
    out
}

pub fn oracle_grad_cam_pp(a: &Planes, g: &Planes) -> Vec<f64> {
    let mut w = Vec::with_capacity(a.len());
    for k in 0..a.len() {
        let sum_a: f64 = a[k].iter().flatten().sum();
        let mut wk = 0.0;
        for (grow, _) in g[k].iter().zip(&a[k]) {
            for &gij in grow {
                let num = gij * gij;
                let den = 2.0 * gij * gij + sum_a * gij * gij * gij;
                let alpha = if den.abs() < 1e-12 { 0.0 } else { num / den };
                wk += alpha * if gij > 0.0 { gij } else { 0.0 };
            }
        }
        w.push(wk);
    }
    combine(a, &w, true)
}

pub fn max_abs_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Generator samples held in memory, no PNG round trip.
pub fn toy_dataset(count: usize, seed: u64) -> Vec<Sample> {
    let spec = ensemble_cam::synthdata::SynthSpec { per_class: count, seed, ..Default::default() };
    let mut out = Vec::new();
    for i in 0..count {
        for label in Label::ALL {
            let (image, _) = ensemble_cam::synthdata::render_sample(&spec, label, i);
            out.push(Sample { id: format!("{}_{i:03}", label.as_str()), label, image });
        }
    }
    out
}

pub fn quick_config(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig { seed, epochs, ..Default::default() }
}

pub const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn ramp_cam() -> ensemble_cam::cam::Cam {
    use ensemble_cam::cam::{Cam, Resolution, Scale};
    Cam::new(8, 8, (0..64).map(|i| i as f64 / 63.0).collect(), Resolution::Input, Scale::Unit).unwrap()
}

fn golden_image() -> Tensor {
    let mut data = Vec::with_capacity(3 * 64);
    for c in 0..3 {
        for y in 0..8 {
            for x in 0..8 {
                data.push(((x + 2 * y + 5 * c) % 11) as f64 / 10.0);
            }
        }
    }
    Tensor::new(Shape::new(1, 3, 8, 8), data).unwrap()
}

/// Rendering cases frozen under tests/fixtures, as (file name, image).
pub fn golden_renders() -> Vec<(&'static str, image::RgbImage)> {
    use ensemble_cam::cam::apply_threshold;
    use ensemble_cam::viz::{colormap, comparison_panel, overlay};
    let ramp = ramp_cam();
    let cut = apply_threshold(&ramp).unwrap();
    let img = golden_image();
    vec![
        ("ramp_8x8.png", colormap(&ramp).unwrap()),
        ("overlay_8x8.png", overlay(&img, &ramp, 0.5).unwrap()),
        ("overlay_thresholded_8x8.png", overlay(&img, &cut, 0.5).unwrap()),
        ("panel_8x8.png", comparison_panel(&img, &[("unit", ramp), ("cut", cut)], 0.5).unwrap()),
    ]
}

/// Compares each render against its fixture, writing the fixtures instead
/// when `ECAM_BLESS` is set. Returns one message per mismatch.
pub fn check_golden() -> Vec<String> {
    let dir = std::path::Path::new(FIXTURES);
    let bless = std::env::var_os("ECAM_BLESS").is_some();
    let mut problems = Vec::new();
    for (name, img) in golden_renders() {
        let path = dir.join(name);
        if bless {
            img.save(&path).unwrap();
            continue;
        }
        match image::open(&path) {
            Ok(stored) => {
                let stored = stored.to_rgb8();
                if stored.dimensions() != img.dimensions() || stored.as_raw() != img.as_raw() {
                    problems.push(format!("{name}: pixels differ from fixture"));
                }
            }
            Err(e) => problems.push(format!("{name}: {e}")),
        }
        let mut encoded = std::io::Cursor::new(Vec::new());
        img.write_to(&mut encoded, image::ImageFormat::Png).unwrap();
        if std::fs::read(&path).ok().as_deref() != Some(encoded.get_ref().as_slice()) {
            problems.push(format!("{name}: encoded bytes differ from fixture"));
        }
    }
    problems
}

/// Runs the `ecam` entry point in-process and returns its exit code.
pub fn ecam(args: &[&str]) -> i32 {
    let argv = std::iter::once("ecam").chain(args.iter().copied()).map(std::ffi::OsString::from);
    ensemble_cam::cli::run(argv)
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &std::path::Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut std::collections::BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let key = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = std::collections::BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Generates, trains and evaluates through the CLI inside `work`, twice,
/// and returns the names of output files whose bytes differed between runs.
pub fn cli_determinism(work: &std::path::Path, per_class: usize, epochs: usize) -> Vec<String> {
    let p = |name: &str| work.join(name).to_string_lossy().into_owned();
    let (data, weights, report) = (p("data"), p("model.ecamw"), p("report"));
    let per_class = per_class.to_string();
    let epochs = epochs.to_string();
    let mut runs = Vec::new();
    for _ in 0..2 {
        assert_eq!(ecam(&["generate", "--out", &data, "--per-class", &per_class, "--seed", "4"]), 0);
        assert_eq!(ecam(&["train", "--data", &data, "--out", &weights, "--epochs", &epochs, "--seed", "4"]), 0);
        assert_eq!(ecam(&["evaluate", "--weights", &weights, "--data", &data, "--out", &report, "--seed", "4"]), 0);
        runs.push(snapshot(work));
    }
    let mut differing: Vec<String> = runs[0]
        .iter()
        .filter(|(k, v)| runs[1].get(*k) != Some(*v))
        .map(|(k, _)| k.clone())
        .collect();
    differing.extend(runs[1].keys().filter(|k| !runs[0].contains_key(*k)).cloned());
    differing
}
