//! Writes a small synthetic live/spoof dataset and checks that each spoof
//! image differs from its live base only inside the artifact window.
//!
//! cargo run --release --example generate_dataset -- [OUT_DIR] [PER_CLASS] [SEED]

use std::path::PathBuf;

use ensemble_cam::synthdata::{generate, render_live_base, render_sample, Split, SynthSpec};
use ensemble_cam::Label;

fn main() -> ensemble_cam::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("ecam-dataset"));
    let per_class = args.next().map_or(60, |s| s.parse().expect("PER_CLASS"));
    let seed = args.next().map_or(7, |s| s.parse().expect("SEED"));

    let spec = SynthSpec { per_class, seed, ..Default::default() };
    let manifest = generate(&spec, &out)?;
    for split in Split::ALL {
        let live = manifest.split(split).filter(|e| e.label == Label::Live).count();
        let spoof = manifest.split(split).count() - live;
        println!("{split:>5}: {live} live, {spoof} spoof");
    }

    let (spoof, window) = render_sample(&spec, Label::Spoof, 0);
    let window = window.expect("spoof images carry a window");
    let base = render_live_base(&spec, Label::Spoof, 0);
    let (mut inside, mut outside) = ((0.0, 0usize), (0.0, 0usize));
    for c in 0..3 {
        for y in 0..spec.size {
            for x in 0..spec.size {
                let d = (spoof.get(0, c, y, x) - base.get(0, c, y, x)).abs();
                let bucket = if window.contains(y, x) { &mut inside } else { &mut outside };
                bucket.0 += d;
                bucket.1 += 1;
            }
        }
    }
    println!(
        "spoof #0 window {}x{} at ({}, {}): mean |diff| inside {:.4}, outside {:.4}",
        window.side,
        window.side,
        window.top,
        window.left,
        inside.0 / inside.1 as f64,
        outside.0 / outside.1.max(1) as f64
    );
    println!("manifest written under {}", out.display());
    Ok(())
}
