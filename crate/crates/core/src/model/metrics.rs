use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Label, Sample, SmallCnn};
use crate::error::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub live_as_live: usize,
    pub live_as_spoof: usize,
    pub spoof_as_spoof: usize,
    pub spoof_as_live: usize,
}

impl ConfusionCounts {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Live, Label::Live) => self.live_as_live += 1,
            (Label::Live, Label::Spoof) => self.live_as_spoof += 1,
            (Label::Spoof, Label::Spoof) => self.spoof_as_spoof += 1,
            (Label::Spoof, Label::Live) => self.spoof_as_live += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.live_as_live + self.live_as_spoof + self.spoof_as_spoof + self.spoof_as_live
    }
}

/// Presentation-attack metrics. A rate whose denominator class is absent is
/// `None` (serialized as `null`), never 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PadMetrics {
    pub accuracy: Option<f64>,
    /// Attacks accepted as live: spoof samples classified live.
    pub apcer: Option<f64>,
    /// Bona fide rejected: live samples classified spoof.
    pub bpcer: Option<f64>,
    pub counts: ConfusionCounts,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl From<ConfusionCounts> for PadMetrics {
    fn from(c: ConfusionCounts) -> Self {
        PadMetrics {
            accuracy: ratio(c.live_as_live + c.spoof_as_spoof, c.total()),
            apcer: ratio(c.spoof_as_live, c.spoof_as_live + c.spoof_as_spoof),
            bpcer: ratio(c.live_as_spoof, c.live_as_spoof + c.live_as_live),
            counts: c,
        }
    }
}

pub fn pad_metrics(model: &SmallCnn, dataset: &[Sample]) -> Result<PadMetrics> {
    let predictions: Vec<Result<Label>> = dataset
        .par_iter()
        .map(|s| model.forward(&s.image).map(|t| t.predicted_class))
        .collect();
    let mut counts = ConfusionCounts::default();
    for (sample, predicted) in dataset.iter().zip(predictions) {
        counts.record(sample.label, predicted?);
    }
    Ok(counts.into())
}
