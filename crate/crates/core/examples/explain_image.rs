//! Explains one spoof image for both classes and measures how much of the
//! ensemble's retained area falls inside the known artifact window.
//!
//! cargo run --release --example explain_image -- [WEIGHTS]
//!
//! Without WEIGHTS a quick model is trained first (about 10 s).

use ensemble_cam::cam::ensemble_cam;
use ensemble_cam::model::{load_weights, train, TrainConfig};
use ensemble_cam::synthdata::{generate, render_sample, Split, SynthSpec};
use ensemble_cam::viz::{comparison_panel, panel_file_name};
use ensemble_cam::{Label, Rng, SmallCnn};

fn main() -> ensemble_cam::Result<()> {
    let model = match std::env::args().nth(1) {
        Some(path) => load_weights(path)?,
        None => {
            let dir = std::env::temp_dir().join("ecam-explain-data");
            let manifest = generate(&SynthSpec { per_class: 100, seed: 1, ..Default::default() }, &dir)?;
            let config = TrainConfig { epochs: 8, seed: 1, ..Default::default() };
            train(SmallCnn::init(&mut Rng::new(1)), &manifest.load_samples(Split::Train)?, &config)?.0
        }
    };

    // An image the model never saw: a different generator seed.
    let (image, window) = render_sample(&SynthSpec { seed: 99, ..Default::default() }, Label::Spoof, 4);
    let window = window.expect("spoof window");
    let trace = model.forward(&image)?;
    println!(
        "predicted {} (live {:.3}, spoof {:.3})",
        trace.predicted_class, trace.probabilities[0], trace.probabilities[1]
    );

    let out = std::env::temp_dir().join("ecam-explain");
    std::fs::create_dir_all(&out)?;
    for class in Label::ALL {
        let g = model.class_gradients(&trace, class.index())?;
        let maps = ensemble_cam(trace.target_activation(), &g, 64, 64)?;
        let support = maps.support();
        let inside = (0..64 * 64)
            .filter(|&i| support.bits()[i] && window.contains(i / 64, i % 64))
            .count();
        println!(
            "{class:>5}: threshold {:.3}, kept {} px, {:.0}% inside the artifact window",
            maps.threshold,
            support.retained_count(),
            100.0 * inside as f64 / support.retained_count() as f64
        );
        let tiles = [
            ("gradcam", maps.parts.grad_cam),
            ("hirescam", maps.parts.hires_cam),
            ("gradcampp", maps.parts.grad_cam_pp),
            ("ensemble", maps.ensemble),
        ];
        let name = panel_file_name(&format!("spoof_{class}"), &tiles.each_ref().map(|(n, _)| *n));
        comparison_panel(&image, &tiles, 0.5)?.save(out.join(&name)).expect("png write");
        println!("       {}", out.join(name).display());
    }
    Ok(())
}
