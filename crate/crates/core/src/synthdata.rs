//! Synthetic live/spoof images and the JSON-lines dataset manifest.
//!
//! A live image is a smooth radial blob over a flat background with slow
//! colour drift and Gaussian sensor noise. A spoof image is the same kind of
//! base with a high-frequency periodic grid (a print/screen artifact
//! stand-in) added inside one random square window, so the evidence for the
//! spoof class is spatially compact.
//!
//! Each image is a pure function of `(seed, label, index)`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{ColorType, ImageFormat, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Label, Sample};
use crate::tensor::{Rng, Shape, Tensor};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const GENERATION_FILE: &str = "generation.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub per_class: usize,
    pub size: usize,
    pub seed: u64,
    /// Grid artifact amplitude, in `(0, 1]`.
    pub intensity: f64,
    /// Standard deviation of the per-pixel Gaussian noise.
    pub noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            per_class: 300,
            size: 64,
            seed: 0,
            intensity: 1.0,
            noise: 0.03,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.per_class == 0 {
            return Err(Error::invalid("need at least one image per class"));
        }
        if !(self.intensity > 0.0 && self.intensity <= 1.0) {
            return Err(Error::invalid(format!(
                "artifact intensity must lie in (0, 1], got {}",
                self.intensity
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid(format!("noise level must be >= 0, got {}", self.noise)));
        }
        if self.size < 8 {
            return Err(Error::invalid(format!("image size {} is too small", self.size)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    /// 70/15/15 by index within one class; the test split takes the remainder.
    pub fn for_index(index: usize, per_class: usize) -> Split {
        let train = per_class * 70 / 100;
        let val = per_class * 15 / 100;
        if index < train {
            Split::Train
        } else if index < train + val {
            Split::Val
        } else {
            Split::Test
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|sp| sp.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown split {s:?} (valid: train, val, test)")))
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Square region holding the spoof grid, in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactWindow {
    pub top: usize,
    pub left: usize,
    pub side: usize,
}

impl ArtifactWindow {
    pub fn contains(&self, y: usize, x: usize) -> bool {
        (self.top..self.top + self.side).contains(&y) && (self.left..self.left + self.side).contains(&x)
    }
}

fn stream_for(label: Label, index: usize) -> u64 {
    ((label.index() as u64) << 32) | index as u64
}

/// Smooth base image (no artifact) and the RNG positioned right after it.
fn render_base(spec: &SynthSpec, rng: &mut Rng) -> Vec<f64> {
    let n = spec.size as f64;
    let cy = rng.range(0.35, 0.65) * n;
    let cx = rng.range(0.35, 0.65) * n;
    let radius = rng.range(0.15, 0.25) * n;
    // Crisp rim: a bright region ending on black must occur in live data too.
    let edge = 0.005 * n;
    let skin_r = rng.range(0.55, 0.85);
    let face = [skin_r, skin_r * rng.range(0.7, 0.85), skin_r * rng.range(0.55, 0.75)];
    let bg_level = rng.range(0.0, 0.05);
    let background = [bg_level, bg_level * rng.range(0.9, 1.1), bg_level * rng.range(0.9, 1.1)];
    let drift_angle = rng.range(0.0, 2.0 * PI);
    let drift_phase: Vec<f64> = (0..3).map(|_| rng.range(0.0, 2.0 * PI)).collect();
    let (dc, ds) = (drift_angle.cos(), drift_angle.sin());

    let plane = spec.size * spec.size;
    let mut out = vec![0.0; 3 * plane];
    for y in 0..spec.size {
        for x in 0..spec.size {
            let (fy, fx) = (y as f64 + 0.5, x as f64 + 0.5);
            let d = ((fy - cy).powi(2) + (fx - cx).powi(2)).sqrt();
            let blend = 1.0 / (1.0 + ((d - radius) / edge).exp());
            let shade = 0.85 + 0.15 * (1.0 - (d / radius).min(1.0));
            let along = (fx * dc + fy * ds) / n;
            for c in 0..3 {
                let drift = 0.05 * (2.0 * PI * along + drift_phase[c]).sin();
                let v = background[c] + (face[c] * shade - background[c]) * blend + drift;
                out[c * plane + y * spec.size + x] = v;
            }
        }
    }
    for v in out.iter_mut() {
        *v += spec.noise * rng.normal();
    }
    out
}

fn finish(spec: &SynthSpec, data: Vec<f64>) -> Tensor {
    let data = data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Tensor::new(Shape::new(1, 3, spec.size, spec.size), data).expect("generator output is finite")
}

/// The artifact-free base of image `(label, index)`.
pub fn render_live_base(spec: &SynthSpec, label: Label, index: usize) -> Tensor {
    let mut rng = Rng::for_stream(spec.seed, stream_for(label, index));
    finish(spec, render_base(spec, &mut rng))
}

/// Image `(label, index)`; spoof images also report their artifact window.
pub fn render_sample(spec: &SynthSpec, label: Label, index: usize) -> (Tensor, Option<ArtifactWindow>) {
    let mut rng = Rng::for_stream(spec.seed, stream_for(label, index));
    let mut data = render_base(spec, &mut rng);
    if label == Label::Live {
        return (finish(spec, data), None);
    }

    let size = spec.size;
    let side = ((rng.range(0.3, 0.45) * size as f64).round() as usize).clamp(2, size);
    let top = rng.below(size - side + 1);
    let left = rng.below(size - side + 1);
    let period = rng.range(3.0, 5.0);
    let theta = rng.range(0.0, PI);
    let (p1, p2) = (rng.range(0.0, 2.0 * PI), rng.range(0.0, 2.0 * PI));
    let tint: Vec<f64> = (0..3).map(|_| rng.range(0.8, 1.2)).collect();
    let (ct, st) = (theta.cos(), theta.sin());
    let amplitude = 0.5 * spec.intensity;

    let plane = size * size;
    for y in top..top + side {
        for x in left..left + side {
            let (fy, fx) = (y as f64, x as f64);
            let u = fx * ct + fy * st;
            let v = -fx * st + fy * ct;
            let grid = (2.0 * PI * u / period + p1).cos() * (2.0 * PI * v / period + p2).cos();
            for c in 0..3 {
                data[c * plane + y * size + x] += amplitude * tint[c] * grid;
            }
        }
    }
    (finish(spec, data), Some(ArtifactWindow { top, left, side }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub label: Label,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.path.as_str()) {
                return Err(Error::Manifest(format!("duplicate path {}", e.path)));
            }
        }
        Ok(Manifest {
            root: root.into(),
            entries,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    /// Reads a manifest and checks that every listed image exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        let mut entries = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ManifestEntry = serde_json::from_str(&line)
                .map_err(|e| Error::Manifest(format!("{}:{}: {e}", path.display(), n + 1)))?;
            entries.push(entry);
        }
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let manifest = Manifest::new(root, entries)?;
        for e in &manifest.entries {
            if !manifest.resolve(e).is_file() {
                return Err(Error::Manifest(format!("missing image {}", e.path)));
            }
        }
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for e in &self.entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Decodes every image of a split. Sample ids are the manifest paths.
    pub fn load_samples(&self, split: Split) -> Result<Vec<Sample>> {
        let entries: Vec<&ManifestEntry> = self.split(split).collect();
        entries
            .par_iter()
            .map(|e| {
                Ok(Sample {
                    id: e.path.clone(),
                    label: e.label,
                    image: load_image(self.resolve(e))?,
                })
            })
            .collect()
    }
}

/// Renders every image to `out_dir/{split}/{label}_{index}.png` and writes
/// `manifest.jsonl` plus the generation settings next to them.
pub fn generate(spec: &SynthSpec, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    for split in Split::ALL {
        fs::create_dir_all(out_dir.join(split.as_str()))?;
    }
    let jobs: Vec<(Label, usize)> = Label::ALL
        .iter()
        .flat_map(|&l| (0..spec.per_class).map(move |i| (l, i)))
        .collect();
    let entries: Vec<ManifestEntry> = jobs
        .par_iter()
        .map(|&(label, index)| {
            let split = Split::for_index(index, spec.per_class);
            let path = format!("{}/{}_{:05}.png", split.as_str(), label.as_str(), index);
            let (image, _) = render_sample(spec, label, index);
            write_image(&image, out_dir.join(&path))?;
            Ok(ManifestEntry { path, label, split })
        })
        .collect::<Result<_>>()?;
    let manifest = Manifest::new(out_dir, entries)?;
    manifest.save(out_dir.join(MANIFEST_FILE))?;
    fs::write(out_dir.join(GENERATION_FILE), serde_json::to_string_pretty(spec)? + "\n")?;
    Ok(manifest)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// `1×3×H×W` tensor in `[0, 1]` to 8-bit RGB.
pub fn tensor_to_rgb(image: &Tensor) -> Result<RgbImage> {
    let s = image.shape();
    if s.batch != 1 || s.channels != 3 {
        return Err(Error::invalid(format!("expected a 1×3×H×W image, got {s}")));
    }
    let plane = s.plane();
    let d = image.data();
    let mut buf = Vec::with_capacity(3 * plane);
    for i in 0..plane {
        for c in 0..3 {
            buf.push(quantize(d[c * plane + i]));
        }
    }
    Ok(RgbImage::from_raw(s.width as u32, s.height as u32, buf).expect("buffer sized to image"))
}

pub fn rgb_to_tensor(rgb: &RgbImage) -> Tensor {
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let plane = w * h;
    let mut data = vec![0.0; 3 * plane];
    for (i, px) in rgb.pixels().enumerate() {
        for c in 0..3 {
            data[c * plane + i] = f64::from(px[c]) / 255.0;
        }
    }
    Tensor::new(Shape::new(1, 3, h, w), data).expect("pixel values are finite")
}

pub fn write_image(image: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    tensor_to_rgb(image)?
        .save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageWarning {
    AlphaDropped,
}

/// Like [`load_image`] but also reports what was discarded.
pub fn decode_image(path: impl AsRef<Path>) -> Result<(Tensor, Option<ImageWarning>)> {
    let path = path.as_ref();
    let fail = |reason: String| Error::Image {
        path: path.to_path_buf(),
        reason,
    };
    let decoded = image::ImageReader::open(path)
        .map_err(|e| fail(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| fail(e.to_string()))?
        .decode()
        .map_err(|e| fail(e.to_string()))?;
    match decoded.color() {
        ColorType::Rgb8 => Ok((rgb_to_tensor(&decoded.into_rgb8()), None)),
        ColorType::Rgba8 => {
            log::warn!("{}: alpha channel dropped", path.display());
            Ok((rgb_to_tensor(&decoded.into_rgb8()), Some(ImageWarning::AlphaDropped)))
        }
        other => Err(fail(format!("expected 8-bit RGB, found {other:?}"))),
    }
}

/// 8-bit RGB PNG to a `1×3×H×W` tensor in `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<Tensor> {
    decode_image(path).map(|(t, _)| t)
}
