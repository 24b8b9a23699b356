//! Full desk-scale run: 300 images per class, default training recipe,
//! retention benchmark on the test split with zero fill.
//!
//! cargo run --release --example retention_benchmark -- [SEED]

use std::time::Instant;

use ensemble_cam::faithfulness::{evaluate_dataset, EvalConfig};
use ensemble_cam::model::{pad_metrics, train, TrainConfig};
use ensemble_cam::synthdata::{generate, Split, SynthSpec};
use ensemble_cam::{Method, Rng, SmallCnn};

fn main() -> ensemble_cam::Result<()> {
    let seed = std::env::args().nth(1).map_or(1, |s| s.parse().expect("SEED"));
    let dir = std::env::temp_dir().join(format!("ecam-benchmark-{seed}"));
    let manifest = generate(&SynthSpec { seed, ..Default::default() }, &dir)?;

    let clock = Instant::now();
    let config = TrainConfig { seed, ..Default::default() };
    let (model, _) = train(SmallCnn::init(&mut Rng::new(seed)), &manifest.load_samples(Split::Train)?, &config)?;
    let val = pad_metrics(&model, &manifest.load_samples(Split::Val)?)?;
    println!("trained in {:.1?}, val accuracy {:.3}", clock.elapsed(), val.accuracy.unwrap_or(f64::NAN));

    let test = manifest.load_samples(Split::Test)?;
    let report = evaluate_dataset(&model, &test, &EvalConfig { seed, dataset: format!("synthetic seed {seed}"), ..Default::default() })?;
    print!("{}", report.to_csv());

    let e = report.summary(Method::Ensemble).expect("ensemble row");
    let r = report.summary(Method::Random).expect("random row");
    println!(
        "ensemble vs random: drop {:.2} vs {:.2}, change {:.2}% vs {:.2}%",
        e.average_confidence_drop, r.average_confidence_drop, e.prediction_change_percentage, r.prediction_change_percentage
    );
    Ok(())
}
