//! Retention benchmark: keep only the pixels an explanation marks as most
//! relevant, re-classify, and measure how much confidence the model loses.
//!
//! For each image the model's own prediction is explained (or the true class,
//! on request). The ensemble keeps its thresholded support; the single CAMs
//! keep their top `fraction` of pixels; the random baseline keeps a uniformly
//! random pixel set of exactly the ensemble's size. Everything outside the
//! kept set is replaced with the fill value.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cam::{ensemble_cam, top_fraction_mask};
use crate::error::{Error, Result};
use crate::mask::RetentionMask;
use crate::method::Method;
use crate::model::{Label, Sample, SmallCnn};
use crate::tensor::{stable_hash, Rng, Tensor};

/// Anything that maps an image to live/spoof probabilities.
pub trait Classifier {
    fn class_probabilities(&self, image: &Tensor) -> Result<[f64; 2]>;
}

impl Classifier for SmallCnn {
    fn class_probabilities(&self, image: &Tensor) -> Result<[f64; 2]> {
        Ok(self.forward(image)?.probabilities)
    }
}

/// Most probable class; a tie goes to live.
pub fn top_class(probabilities: &[f64; 2]) -> Label {
    if probabilities[1] > probabilities[0] {
        Label::Spoof
    } else {
        Label::Live
    }
}

/// Keeps masked pixels in every channel and zeroes the rest.
pub fn retain_regions(image: &Tensor, mask: &RetentionMask) -> Result<Tensor> {
    let channels = image.shape().channels;
    retain_regions_filled(image, mask, &vec![0.0; channels])
}

/// Keeps masked pixels and writes `fill[c]` everywhere else in channel `c`.
pub fn retain_regions_filled(image: &Tensor, mask: &RetentionMask, fill: &[f64]) -> Result<Tensor> {
    let s = image.shape();
    if s.height != mask.height() || s.width != mask.width() {
        return Err(Error::ShapeMismatch {
            left: format!("image {s}"),
            right: format!("mask {}×{}", mask.height(), mask.width()),
        });
    }
    if fill.len() != s.channels {
        return Err(Error::invalid(format!(
            "{} fill values for {} channels",
            fill.len(),
            s.channels
        )));
    }
    let plane = s.plane();
    let mut data = image.data().to_vec();
    for (i, chunk) in data.chunks_mut(plane).enumerate() {
        let f = fill[i % s.channels];
        for (v, &keep) in chunk.iter_mut().zip(mask.bits()) {
            if !keep {
                *v = f;
            }
        }
    }
    Tensor::new(s, data)
}

/// Exactly `retained_count` pixels chosen uniformly at random.
pub fn random_mask(retained_count: usize, height: usize, width: usize, rng: &mut Rng) -> Result<RetentionMask> {
    let total = height * width;
    if retained_count == 0 || retained_count > total {
        return Err(Error::invalid(format!(
            "random mask needs 0 < count <= {total}, got {retained_count}"
        )));
    }
    let mut bits = vec![false; total];
    for i in rand::seq::index::sample(rng, total, retained_count) {
        bits[i] = true;
    }
    RetentionMask::new(height, width, bits)
}

/// Loss in probability of the originally predicted class, in percentage
/// points. Negative when masking raises the confidence.
pub fn confidence_drop(model: &impl Classifier, image: &Tensor, masked_image: &Tensor) -> Result<f64> {
    let before = model.class_probabilities(image)?;
    let after = model.class_probabilities(masked_image)?;
    let c = top_class(&before).index();
    Ok((before[c] - after[c]) * 100.0)
}

pub fn prediction_change(model: &impl Classifier, image: &Tensor, masked_image: &Tensor) -> Result<bool> {
    let before = model.class_probabilities(image)?;
    let after = model.class_probabilities(masked_image)?;
    Ok(top_class(&before) != top_class(&after))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fill {
    #[default]
    Zero,
    /// Per-channel mean over the evaluated images.
    DatasetMean,
}

/// Which class the explanations are computed for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetClass {
    #[default]
    Predicted,
    True,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub methods: Vec<Method>,
    pub fraction: f64,
    pub seed: u64,
    pub fill: Fill,
    pub target: TargetClass,
    /// Free-form dataset identifier carried into the report.
    pub dataset: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            methods: Method::ALL.to_vec(),
            fraction: 0.1,
            seed: 0,
            fill: Fill::Zero,
            target: TargetClass::Predicted,
            dataset: String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub label: Label,
    pub method: Method,
    pub retained_count: usize,
    pub original_class: Label,
    pub original_confidence: f64,
    pub masked_class: Label,
    /// Probability of `original_class` on the masked image.
    pub masked_confidence: f64,
}

impl ImageRecord {
    pub fn confidence_drop(&self) -> f64 {
        (self.original_confidence - self.masked_confidence) * 100.0
    }

    pub fn changed(&self) -> bool {
        self.original_class != self.masked_class
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub name: String,
    pub images: usize,
    /// Mean drop in percentage points.
    pub average_confidence_drop: f64,
    pub prediction_change_percentage: f64,
}

/// Full-scale figures reported for a DenseNet-161 on CelebA-Spoof. Carried in
/// every report as context; they are not targets for this toy setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub method: Method,
    pub average_confidence_drop: f64,
    pub prediction_change_percentage: f64,
}

pub fn reference_rows() -> Vec<ReferenceRow> {
    [
        (Method::GradCam, 28.75, 35.33),
        (Method::HiResCam, 37.08, 50.58),
        (Method::GradCamPlusPlus, 21.21, 27.05),
        (Method::Ensemble, 15.43, 15.90),
        (Method::Random, 26.42, 26.90),
    ]
    .into_iter()
    .map(|(method, drop, change)| ReferenceRow {
        method,
        average_confidence_drop: drop,
        prediction_change_percentage: change,
    })
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub seed: u64,
    pub fraction: f64,
    pub fill: Fill,
    pub target: TargetClass,
    pub images: usize,
    pub reference: Vec<ReferenceRow>,
    pub methods: Vec<MethodSummary>,
    pub records: Vec<ImageRecord>,
}

/// Per-method aggregates, in `methods` order.
pub fn summarize(records: &[ImageRecord], methods: &[Method]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&method| {
            let rows: Vec<&ImageRecord> = records.iter().filter(|r| r.method == method).collect();
            let n = rows.len();
            let (drop, changed) = rows
                .iter()
                .fold((0.0, 0usize), |(d, c), r| (d + r.confidence_drop(), c + usize::from(r.changed())));
            let mean = |total: f64| if n == 0 { 0.0 } else { total / n as f64 };
            MethodSummary {
                method,
                name: method.display_name().to_string(),
                images: n,
                average_confidence_drop: mean(drop),
                prediction_change_percentage: mean(100.0 * changed as f64),
            }
        })
        .collect()
}

fn canonical_methods(methods: &[Method]) -> Vec<Method> {
    Method::ALL.into_iter().filter(|m| methods.contains(m)).collect()
}

fn channel_means(samples: &[Sample]) -> Vec<f64> {
    let channels = samples[0].image.shape().channels;
    let mut sums = vec![0.0; channels];
    let mut count = 0usize;
    for s in samples {
        let plane = s.image.shape().plane();
        for (c, sum) in sums.iter_mut().enumerate() {
            *sum += s.image.plane(0, c).iter().sum::<f64>();
        }
        count += plane;
    }
    sums.into_iter().map(|s| s / count as f64).collect()
}

fn evaluate_image(model: &SmallCnn, sample: &Sample, config: &EvalConfig, methods: &[Method], fill: &[f64]) -> Result<Vec<ImageRecord>> {
    let image = &sample.image;
    let s = image.shape();
    let trace = model.forward(image)?;
    let target = match config.target {
        TargetClass::Predicted => trace.predicted_class,
        TargetClass::True => sample.label,
    };
    let gradient = model.class_gradients(&trace, target.index())?;
    let explained = ensemble_cam(trace.target_activation(), &gradient, s.height, s.width)?;
    let ensemble_mask = top_fraction_mask(&explained.average, config.fraction)?;

    let original_class = trace.predicted_class;
    let original_confidence = trace.confidence;
    let mut records = Vec::with_capacity(methods.len());
    for &method in methods {
        let mask = match method {
            Method::GradCam => top_fraction_mask(&explained.parts.grad_cam, config.fraction)?,
            Method::HiResCam => top_fraction_mask(&explained.parts.hires_cam, config.fraction)?,
            Method::GradCamPlusPlus => top_fraction_mask(&explained.parts.grad_cam_pp, config.fraction)?,
            Method::Ensemble => ensemble_mask.clone(),
            Method::Random => {
                let mut rng = Rng::for_stream(config.seed, stable_hash(&sample.id));
                random_mask(ensemble_mask.retained_count(), s.height, s.width, &mut rng)?
            }
        };
        let masked = retain_regions_filled(image, &mask, fill)?;
        let after = model.class_probabilities(&masked)?;
        records.push(ImageRecord {
            image_id: sample.id.clone(),
            label: sample.label,
            method,
            retained_count: mask.retained_count(),
            original_class,
            original_confidence,
            masked_class: top_class(&after),
            masked_confidence: after[original_class.index()],
        });
    }
    Ok(records)
}

/// Runs the retention benchmark over `dataset`. Images are processed in
/// parallel; records are sorted by image id and method, and each image's
/// random mask is seeded from its id, so the report does not depend on
/// dataset order or thread scheduling.
pub fn evaluate_dataset(model: &SmallCnn, dataset: &[Sample], config: &EvalConfig) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    if config.methods.is_empty() {
        return Err(Error::invalid("no methods selected"));
    }
    if !(config.fraction > 0.0 && config.fraction < 1.0) {
        return Err(Error::invalid(format!("fraction must lie in (0, 1), got {}", config.fraction)));
    }
    let methods = canonical_methods(&config.methods);
    let fill = match config.fill {
        Fill::Zero => vec![0.0; dataset[0].image.shape().channels],
        Fill::DatasetMean => channel_means(dataset),
    };

    let per_image: Vec<Result<Vec<ImageRecord>>> = dataset
        .par_iter()
        .map(|sample| evaluate_image(model, sample, config, &methods, &fill))
        .collect();
    let mut records = Vec::with_capacity(dataset.len() * methods.len());
    for r in per_image {
        records.extend(r?);
    }
    records.sort_by(|a, b| a.image_id.cmp(&b.image_id).then(a.method.cmp(&b.method)));

    Ok(EvalReport {
        dataset: config.dataset.clone(),
        seed: config.seed,
        fraction: config.fraction,
        fill: config.fill,
        target: config.target,
        images: dataset.len(),
        reference: reference_rows(),
        methods: summarize(&records, &methods),
        records,
    })
}

pub const DROP_ROW: &str = "Average Confidence Drop (lower is better)";
pub const CHANGE_ROW: &str = "Prediction Change Percentage (lower is better)";

impl EvalReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Metric rows × method columns, with `#` header lines for run settings
    /// and the full-scale reference.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# retention benchmark: dataset={} images={} seed={} fraction={} fill={:?} target={:?}",
            self.dataset, self.images, self.seed, self.fraction, self.fill, self.target
        );
        let reference: Vec<String> = self
            .reference
            .iter()
            .map(|r| format!("{} {:.2}/{:.2}", r.method, r.average_confidence_drop, r.prediction_change_percentage))
            .collect();
        let _ = writeln!(
            out,
            "# reference drop/change at full scale (DenseNet-161, CelebA-Spoof; not a reproduction target): {}",
            reference.join(", ")
        );
        let mut ranked: Vec<&MethodSummary> = self.methods.iter().collect();
        ranked.sort_by(|a, b| a.average_confidence_drop.total_cmp(&b.average_confidence_drop));
        let ranked: Vec<&str> = ranked.iter().map(|m| m.name.as_str()).collect();
        let _ = writeln!(out, "# ordering by drop here: {}", ranked.join(" < "));

        let names: Vec<&str> = self.methods.iter().map(|m| m.name.as_str()).collect();
        let _ = writeln!(out, "metric,{}", names.join(","));
        let row = |f: fn(&MethodSummary) -> f64| -> String {
            self.methods.iter().map(|m| format!("{:.4}", f(m))).collect::<Vec<_>>().join(",")
        };
        let _ = writeln!(out, "{DROP_ROW},{}", row(|m| m.average_confidence_drop));
        let _ = writeln!(out, "{CHANGE_ROW},{}", row(|m| m.prediction_change_percentage));
        out
    }

    /// Writes `<stem>.json` and `<stem>.csv`; any extension on `path` is replaced.
    pub fn write_files(&self, path: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
        let path = path.as_ref();
        let json = path.with_extension("json");
        let csv = path.with_extension("csv");
        if let Some(dir) = json.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&json, self.to_json()?)?;
        std::fs::write(&csv, self.to_csv())?;
        Ok((json, csv))
    }
}
