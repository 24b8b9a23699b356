//! Trains the classifier on generated data with the default recipe
//! (AdamW 5e-4, 20 epochs, ×0.1 every 7) and reports PAD metrics.
//!
//! cargo run --release --example train_classifier -- [PER_CLASS] [SEED] [WEIGHTS_OUT]

use std::path::PathBuf;

use ensemble_cam::model::{load_weights, pad_metrics, save_weights, train, TrainConfig};
use ensemble_cam::synthdata::{generate, Split, SynthSpec};
use ensemble_cam::{Rng, SmallCnn};

fn main() -> ensemble_cam::Result<()> {
    let mut args = std::env::args().skip(1);
    let per_class = args.next().map_or(300, |s| s.parse().expect("PER_CLASS"));
    let seed = args.next().map_or(7, |s| s.parse().expect("SEED"));
    let weights = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ecam-model.bin"));

    let dir = std::env::temp_dir().join(format!("ecam-train-{seed}"));
    let manifest = generate(&SynthSpec { per_class, seed, ..Default::default() }, &dir)?;
    let train_set = manifest.load_samples(Split::Train)?;

    let config = TrainConfig { seed, ..Default::default() };
    let (model, report) = train(SmallCnn::init(&mut Rng::new(seed)), &train_set, &config)?;
    for e in &report.epochs {
        println!("epoch {:>2}  lr {:.0e}  loss {:.4}  acc {:.3}", e.epoch, e.learning_rate, e.loss, e.accuracy);
    }

    for split in [Split::Val, Split::Test] {
        let m = pad_metrics(&model, &manifest.load_samples(split)?)?;
        println!(
            "{split}: accuracy {:.3}  apcer {:.3}  bpcer {:.3}",
            m.accuracy.unwrap_or(f64::NAN),
            m.apcer.unwrap_or(f64::NAN),
            m.bpcer.unwrap_or(f64::NAN)
        );
    }

    save_weights(&model, &weights)?;
    assert_eq!(load_weights(&weights)?, model);
    println!("weights: {} ({} parameters)", weights.display(), model.param_count());
    Ok(())
}
