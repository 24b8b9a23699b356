//! Renders a colour-ramp strip, an ensemble overlay on a synthetic spoof
//! image and a four-method comparison panel.
//!
//! cargo run --release --example render_overlays -- [OUT_DIR]

use std::path::PathBuf;

use ensemble_cam::cam::{ensemble_cam, Cam, Resolution, Scale};
use ensemble_cam::synthdata::{render_sample, write_image, SynthSpec};
use ensemble_cam::viz::{colormap, comparison_panel, overlay, panel_file_name};
use ensemble_cam::{Label, Rng, SmallCnn};

fn main() -> ensemble_cam::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ecam-overlays"));
    std::fs::create_dir_all(&out)?;
    let save = |img: image::RgbImage, name: &str| {
        img.save(out.join(name)).expect("png write");
        println!("{}", out.join(name).display());
    };

    let (w, h) = (256, 16);
    let ramp = Cam::new(h, w, (0..h * w).map(|i| (i % w) as f64 / (w - 1) as f64).collect(), Resolution::Input, Scale::Unit)?;
    save(colormap(&ramp)?, "ramp.png");

    let (image, _) = render_sample(&SynthSpec { seed: 3, ..Default::default() }, Label::Spoof, 0);
    write_image(&image, out.join("spoof.png"))?;

    // An untrained model is enough to exercise the rendering path.
    let model = SmallCnn::init(&mut Rng::new(5));
    let trace = model.forward(&image)?;
    let g = model.class_gradients(&trace, Label::Spoof.index())?;
    let maps = ensemble_cam(trace.target_activation(), &g, 64, 64)?;
    save(overlay(&image, &maps.ensemble, 0.5)?, "spoof_ensemble.png");

    let tiles = [
        ("gradcam", maps.parts.grad_cam.clone()),
        ("hirescam", maps.parts.hires_cam.clone()),
        ("gradcampp", maps.parts.grad_cam_pp.clone()),
        ("ensemble", maps.ensemble.clone()),
    ];
    let names = tiles.each_ref().map(|(n, _)| *n);
    save(comparison_panel(&image, &tiles, 0.5)?, &panel_file_name("spoof", &names));
    Ok(())
}
