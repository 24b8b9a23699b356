use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Label, Sample, SmallCnn};
use crate::error::{Error, Result};
use crate::tensor::Rng;

/// Optimizer and schedule settings. Defaults are the fine-tuning recipe:
/// AdamW at 5e-4 for 20 epochs, learning rate ×0.1 every 7 epochs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub step_size: usize,
    pub gamma: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 5e-4,
            epochs: 20,
            step_size: 7,
            gamma: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            batch_size: 8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if self.epochs == 0 || self.step_size == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs, step size and batch size must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.eps <= 0.0 || self.weight_decay < 0.0 {
            return Err(Error::invalid("AdamW needs beta1, beta2 in [0, 1), eps > 0, weight decay >= 0"));
        }
        Ok(())
    }

    pub fn schedule(&self) -> StepLr {
        StepLr {
            base: self.learning_rate,
            step_size: self.step_size,
            gamma: self.gamma,
        }
    }
}

/// Epoch-wise step decay.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepLr {
    pub base: f64,
    pub step_size: usize,
    pub gamma: f64,
}

impl StepLr {
    /// Learning rate in force during `epoch` (1-based).
    pub fn lr(&self, epoch: usize) -> f64 {
        let decays = epoch.saturating_sub(1) / self.step_size.max(1);
        self.base * self.gamma.powi(decays as i32)
    }
}

/// Adam with decoupled weight decay. The decay shrinks parameters by
/// `lr·weight_decay` before the adaptive step, as in the usual reference.
#[derive(Clone, Debug)]
pub struct AdamW {
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamW {
    pub fn new(config: &TrainConfig, model: &SmallCnn) -> Self {
        let sizes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
        AdamW {
            beta1: config.beta1,
            beta2: config.beta2,
            eps: config.eps,
            weight_decay: config.weight_decay,
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    pub fn step(&mut self, model: &mut SmallCnn, grads: &SmallCnn, lr: f64) -> Result<()> {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        let grads = grads.params();
        for (i, param) in model.params_mut().into_iter().enumerate() {
            let (m, v, g) = (&mut self.m[i], &mut self.v[i], grads[i]);
            for j in 0..param.len() {
                param[j] -= lr * self.weight_decay * param[j];
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                param[j] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        if !model.is_finite() {
            return Err(Error::NonFinite("model weights after optimizer step"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean training loss over the epoch's samples, before each step's update.
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Mean batch loss of every optimizer step, in order.
    pub step_losses: Vec<f64>,
}

struct BatchResult {
    loss: f64,
    correct: usize,
    grads: Vec<f64>,
}

fn batch_gradients(model: &SmallCnn, samples: &[&Sample]) -> Result<BatchResult> {
    let per_sample: Vec<Result<(f64, bool, SmallCnn)>> = samples
        .par_iter()
        .map(|s| {
            let trace = model.forward(&s.image)?;
            let (loss, grads) = model.loss_gradients(&trace, s.label)?;
            Ok((loss, trace.predicted_class == s.label, grads))
        })
        .collect();

    // fixed summation order keeps results independent of thread scheduling
    let mut acc = vec![0.0; model.param_count()];
    let mut loss = 0.0;
    let mut correct = 0;
    for r in per_sample {
        let (l, ok, g) = r?;
        loss += l;
        correct += usize::from(ok);
        let mut offset = 0;
        for p in g.params() {
            for (a, v) in acc[offset..offset + p.len()].iter_mut().zip(p) {
                *a += v;
            }
            offset += p.len();
        }
    }
    let scale = 1.0 / samples.len() as f64;
    acc.iter_mut().for_each(|a| *a *= scale);
    Ok(BatchResult { loss, correct, grads: acc })
}

fn unflatten(flat: &[f64]) -> SmallCnn {
    let mut out = SmallCnn::zeros();
    let mut offset = 0;
    for p in out.params_mut() {
        let n = p.len();
        p.copy_from_slice(&flat[offset..offset + n]);
        offset += n;
    }
    out
}

/// Mini-batch AdamW training. Deterministic for a fixed `config.seed`: the
/// sample order of epoch `e` comes from RNG stream `e`.
pub fn train(mut model: SmallCnn, dataset: &[Sample], config: &TrainConfig) -> Result<(SmallCnn, TrainReport)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    for label in Label::ALL {
        if !dataset.iter().any(|s| s.label == label) {
            return Err(Error::invalid(format!("training set has no {label} samples")));
        }
    }

    let schedule = config.schedule();
    let mut optimizer = AdamW::new(config, &model);
    let mut report = TrainReport::default();
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    for epoch in 1..=config.epochs {
        let lr = schedule.lr(epoch);
        order.sort_unstable();
        order.shuffle(&mut Rng::for_stream(config.seed, epoch as u64));

        let mut epoch_loss = 0.0;
        let mut epoch_correct = 0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &dataset[i]).collect();
            let result = batch_gradients(&model, &batch)?;
            optimizer.step(&mut model, &unflatten(&result.grads), lr)?;
            report.step_losses.push(result.loss / batch.len() as f64);
            epoch_loss += result.loss;
            epoch_correct += result.correct;
        }
        let n = dataset.len() as f64;
        let stats = EpochStats {
            epoch,
            learning_rate: lr,
            loss: epoch_loss / n,
            accuracy: epoch_correct as f64 / n,
        };
        log::info!(
            "epoch {:>2}  lr {:.1e}  loss {:.4}  acc {:.3}",
            stats.epoch,
            stats.learning_rate,
            stats.loss,
            stats.accuracy
        );
        report.epochs.push(stats);
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_has_three_plateaus() {
        let s = TrainConfig::default().schedule();
        for e in 1..=7 {
            assert_eq!(s.lr(e), 5e-4);
        }
        for e in 8..=14 {
            assert!((s.lr(e) - 5e-5).abs() < 1e-18);
        }
        for e in 15..=20 {
            assert!((s.lr(e) - 5e-6).abs() < 1e-18);
        }
    }

    #[test]
    fn unit_gamma_is_constant() {
        for step_size in [1, 3, 50] {
            let s = StepLr { base: 0.01, step_size, gamma: 1.0 };
            assert!((1..=30).all(|e| s.lr(e) == 0.01));
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { gamma: 0.0, ..Default::default() },
            TrainConfig { gamma: 1.5, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn adamw_first_step_moves_by_lr() {
        // with bias correction the first step is lr·sign(g) (eps aside)
        let mut model = SmallCnn::zeros();
        let mut grads = SmallCnn::zeros();
        grads.fc.bias = vec![3.0, -0.5];
        let cfg = TrainConfig { weight_decay: 0.0, ..Default::default() };
        let mut opt = AdamW::new(&cfg, &model);
        opt.step(&mut model, &grads, 0.1).unwrap();
        assert!((model.fc.bias[0] + 0.1).abs() < 1e-8);
        assert!((model.fc.bias[1] - 0.1).abs() < 1e-8);
        assert_eq!(model.conv1.bias, vec![0.0; 8]);
    }

    #[test]
    fn weight_decay_is_decoupled() {
        let mut model = SmallCnn::zeros();
        model.fc.bias = vec![1.0, 1.0];
        let grads = SmallCnn::zeros();
        let cfg = TrainConfig { weight_decay: 0.5, ..Default::default() };
        let mut opt = AdamW::new(&cfg, &model);
        opt.step(&mut model, &grads, 0.1).unwrap();
        assert!((model.fc.bias[0] - 0.95).abs() < 1e-15);
    }
}
