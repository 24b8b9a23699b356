//! Heat-map colouring and overlays.
//!
//! The colour ramp is piecewise linear through four anchors:
//!
//! | value | colour              |
//! |-------|---------------------|
//! | 0.00  | blue   (0, 0, 255)  |
//! | 0.35  | green  (0, 255, 0)  |
//! | 0.65  | yellow (255, 255, 0)|
//! | 1.00  | red    (255, 0, 0)  |

use image::{Rgb, RgbImage};

use crate::cam::{Cam, Scale};
use crate::error::{Error, Result};
use crate::synthdata::tensor_to_rgb;
use crate::tensor::Tensor;

pub const RAMP: [(f64, [f64; 3]); 4] = [
    (0.0, [0.0, 0.0, 255.0]),
    (0.35, [0.0, 255.0, 0.0]),
    (0.65, [255.0, 255.0, 0.0]),
    (1.0, [255.0, 0.0, 0.0]),
];

pub const SEPARATOR: usize = 2;

/// Index of the ramp segment `value` falls in (0 = blue→green, 2 = yellow→red).
pub fn ramp_segment(value: f64) -> usize {
    RAMP[1..3].iter().filter(|(at, _)| value > *at).count()
}

/// Ramp colour in `0..=255` floating point.
pub fn ramp_color(value: f64) -> [f64; 3] {
    let seg = ramp_segment(value);
    let (lo, c0) = RAMP[seg];
    let (hi, c1) = RAMP[seg + 1];
    let t = ((value - lo) / (hi - lo)).clamp(0.0, 1.0);
    [0, 1, 2].map(|i| c0[i] + t * (c1[i] - c0[i]))
}

pub fn jet(value: f64) -> Rgb<u8> {
    Rgb(ramp_color(value).map(|v| v.round() as u8))
}

fn check_unit(cam: &Cam) -> Result<()> {
    if cam.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid("colormap needs cam values in [0, 1]"));
    }
    Ok(())
}

pub fn colormap(cam: &Cam) -> Result<RgbImage> {
    check_unit(cam)?;
    let mut out = RgbImage::new(cam.width() as u32, cam.height() as u32);
    for (i, px) in out.pixels_mut().enumerate() {
        *px = jet(cam.values()[i]);
    }
    Ok(out)
}

/// `(1 − alpha)·image + alpha·colour`. On a thresholded cam, zeroed pixels
/// are left as the plain image.
pub fn overlay(image: &Tensor, cam: &Cam, alpha: f64) -> Result<RgbImage> {
    check_unit(cam)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let s = image.shape();
    if s.height != cam.height() || s.width != cam.width() {
        return Err(Error::ShapeMismatch {
            left: format!("image {s}"),
            right: format!("cam {}×{}", cam.height(), cam.width()),
        });
    }
    let mut out = tensor_to_rgb(image)?;
    let plane = s.plane();
    let data = image.data();
    let transparent_zeros = cam.scale() == Scale::Thresholded;
    for (i, px) in out.pixels_mut().enumerate() {
        let v = cam.values()[i];
        if transparent_zeros && v == 0.0 {
            continue;
        }
        let color = ramp_color(v);
        for c in 0..3 {
            let base = data[c * plane + i].clamp(0.0, 1.0);
            let mixed = ((1.0 - alpha) * base + alpha * color[c] / 255.0).clamp(0.0, 1.0);
            px[c] = (mixed * 255.0).round() as u8;
        }
    }
    Ok(out)
}

/// Original image followed by one overlay per cam, left to right, with
/// white separators.
pub fn comparison_panel<S: AsRef<str>>(image: &Tensor, cams: &[(S, Cam)], alpha: f64) -> Result<RgbImage> {
    if cams.is_empty() {
        return Err(Error::invalid("comparison panel needs at least one cam"));
    }
    let original = tensor_to_rgb(image)?;
    let (w, h) = (original.width(), original.height());
    let tiles = cams.len() as u32 + 1;
    let width = tiles * w + (tiles - 1) * SEPARATOR as u32;
    let mut panel = RgbImage::from_pixel(width, h, Rgb([255, 255, 255]));
    let mut place = |tile: &RgbImage, index: u32| {
        let left = index * (w + SEPARATOR as u32);
        for (x, y, px) in tile.enumerate_pixels() {
            panel.put_pixel(left + x, y, *px);
        }
    };
    place(&original, 0);
    for (i, (_, cam)) in cams.iter().enumerate() {
        place(&overlay(image, cam, alpha)?, i as u32 + 1);
    }
    Ok(panel)
}

/// `<stem>__original-<name1>-<name2>….png`, recording the column order.
pub fn panel_file_name<S: AsRef<str>>(stem: &str, names: &[S]) -> String {
    let mut parts = vec!["original"];
    parts.extend(names.iter().map(|n| n.as_ref()));
    format!("{stem}__{}.png", parts.join("-"))
}
