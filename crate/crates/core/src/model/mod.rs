//! The small presentation-attack classifier and its hand-written backward pass.
//!
//! Architecture (input `1×3×64×64`, values in `[0, 1]`):
//!
//! ```text
//! conv1 3→8  3×3 pad 1 → ReLU → maxpool 2
//! conv2 8→16 3×3 pad 1 → ReLU → maxpool 2
//! conv3 16→32 3×3 pad 1 → ReLU            (explanation target, 32×16×16)
//! global average pool → affine 32→2       (class 0 = live, class 1 = spoof)
//! ```

mod metrics;
mod train;
mod weights;

pub use metrics::{pad_metrics, ConfusionCounts, PadMetrics};
pub use train::{train, AdamW, EpochStats, StepLr, TrainConfig, TrainReport};
pub use weights::{load_weights, read_weights, save_weights, write_weights, WEIGHT_MAGIC, WEIGHT_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ops;
use crate::tensor::{Rng, Shape, Tensor};

pub const INPUT_SIZE: usize = 64;
pub const INPUT_CHANNELS: usize = 3;
pub const NUM_CLASSES: usize = 2;
pub const TARGET_CHANNELS: usize = 32;
pub const TARGET_SIZE: usize = 16;

pub const INPUT_SHAPE: Shape = Shape::new(1, INPUT_CHANNELS, INPUT_SIZE, INPUT_SIZE);
pub const TARGET_SHAPE: Shape = Shape::new(1, TARGET_CHANNELS, TARGET_SIZE, TARGET_SIZE);

/// Ground-truth or predicted class of a face image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Live,
    Spoof,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Live, Label::Spoof];

    pub fn index(self) -> usize {
        match self {
            Label::Live => 0,
            Label::Spoof => 1,
        }
    }

    pub fn from_index(index: usize) -> Result<Label> {
        match index {
            0 => Ok(Label::Live),
            1 => Ok(Label::Spoof),
            _ => Err(Error::invalid(format!("class index {index} is not 0 (live) or 1 (spoof)"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Live => "live",
            Label::Spoof => "spoof",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A labelled image with a stable identifier.
#[derive(Clone, Debug)]
pub struct Sample {
    pub id: String,
    pub label: Label,
    pub image: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub weight: Tensor,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    /// `out × in × 1 × 1`
    pub weight: Tensor,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmallCnn {
    pub conv1: ConvLayer,
    pub conv2: ConvLayer,
    pub conv3: ConvLayer,
    pub fc: Linear,
}

/// Name and dimensions of one parameter tensor, in weight-file order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub dims: Vec<usize>,
}

impl ParamSpec {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

const CONV_SPECS: [(usize, usize); 3] = [(INPUT_CHANNELS, 8), (8, 16), (16, TARGET_CHANNELS)];

fn conv_zeros(cin: usize, cout: usize) -> ConvLayer {
    ConvLayer {
        weight: Tensor::zeros(Shape::new(cout, cin, 3, 3)),
        bias: vec![0.0; cout],
    }
}

fn conv_init(cin: usize, cout: usize, rng: &mut Rng) -> ConvLayer {
    let bound = (6.0 / (cin * 9) as f64).sqrt();
    ConvLayer {
        weight: Tensor::uniform(Shape::new(cout, cin, 3, 3), -bound, bound, rng),
        bias: vec![0.0; cout],
    }
}

impl SmallCnn {
    pub fn zeros() -> Self {
        SmallCnn {
            conv1: conv_zeros(CONV_SPECS[0].0, CONV_SPECS[0].1),
            conv2: conv_zeros(CONV_SPECS[1].0, CONV_SPECS[1].1),
            conv3: conv_zeros(CONV_SPECS[2].0, CONV_SPECS[2].1),
            fc: Linear {
                weight: Tensor::zeros(Shape::new(NUM_CLASSES, TARGET_CHANNELS, 1, 1)),
                bias: vec![0.0; NUM_CLASSES],
            },
        }
    }

    /// Kaiming-uniform convolutions (bound `sqrt(6 / fan_in)`), head uniform
    /// in `±1/sqrt(fan_in)`, all biases zero.
    pub fn init(rng: &mut Rng) -> Self {
        let conv1 = conv_init(CONV_SPECS[0].0, CONV_SPECS[0].1, rng);
        let conv2 = conv_init(CONV_SPECS[1].0, CONV_SPECS[1].1, rng);
        let conv3 = conv_init(CONV_SPECS[2].0, CONV_SPECS[2].1, rng);
        let bound = 1.0 / (TARGET_CHANNELS as f64).sqrt();
        let fc = Linear {
            weight: Tensor::uniform(Shape::new(NUM_CLASSES, TARGET_CHANNELS, 1, 1), -bound, bound, rng),
            bias: vec![0.0; NUM_CLASSES],
        };
        SmallCnn { conv1, conv2, conv3, fc }
    }

    pub fn param_specs() -> Vec<ParamSpec> {
        let mut specs = Vec::with_capacity(8);
        for (i, &(cin, cout)) in CONV_SPECS.iter().enumerate() {
            let (w, b) = [("conv1.weight", "conv1.bias"), ("conv2.weight", "conv2.bias"), ("conv3.weight", "conv3.bias")][i];
            specs.push(ParamSpec { name: w, dims: vec![cout, cin, 3, 3] });
            specs.push(ParamSpec { name: b, dims: vec![cout] });
        }
        specs.push(ParamSpec { name: "fc.weight", dims: vec![NUM_CLASSES, TARGET_CHANNELS] });
        specs.push(ParamSpec { name: "fc.bias", dims: vec![NUM_CLASSES] });
        specs
    }

    /// Parameter buffers in [`SmallCnn::param_specs`] order.
    pub fn params(&self) -> [&[f64]; 8] {
        [
            self.conv1.weight.data(),
            &self.conv1.bias,
            self.conv2.weight.data(),
            &self.conv2.bias,
            self.conv3.weight.data(),
            &self.conv3.bias,
            self.fc.weight.data(),
            &self.fc.bias,
        ]
    }

    pub(crate) fn params_mut(&mut self) -> [&mut [f64]; 8] {
        let SmallCnn { conv1, conv2, conv3, fc } = self;
        [
            conv1.weight.data_mut(),
            &mut conv1.bias,
            conv2.weight.data_mut(),
            &mut conv2.bias,
            conv3.weight.data_mut(),
            &mut conv3.bias,
            fc.weight.data_mut(),
            &mut fc.bias,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    pub fn forward(&self, image: &Tensor) -> Result<ForwardTrace> {
        if image.shape() != INPUT_SHAPE {
            return Err(Error::shapes(image.shape(), INPUT_SHAPE));
        }
        let conv1 = ops::relu(&ops::conv2d(image, &self.conv1.weight, &self.conv1.bias, 1, 1)?);
        let (pool1, pool1_idx) = ops::maxpool2(&conv1)?;
        let conv2 = ops::relu(&ops::conv2d(&pool1, &self.conv2.weight, &self.conv2.bias, 1, 1)?);
        let (pool2, pool2_idx) = ops::maxpool2(&conv2)?;
        let conv3 = ops::relu(&ops::conv2d(&pool2, &self.conv3.weight, &self.conv3.bias, 1, 1)?);
        let pooled = ops::global_avg_pool(&conv3).into_data();
        let logits = ops::affine(&pooled, &self.fc.weight, &self.fc.bias)?;
        let logits = [logits[0], logits[1]];
        if !logits.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("logits"));
        }
        let p = ops::softmax(&logits);
        let probabilities = [p[0], p[1]];
        let predicted_class = predict(&logits);
        Ok(ForwardTrace {
            input: image.clone(),
            conv1,
            pool1,
            conv2,
            pool2,
            conv3,
            pooled,
            logits,
            probabilities,
            predicted_class,
            confidence: probabilities[predicted_class.index()],
            pool1_idx,
            pool2_idx,
        })
    }

    /// Logits as a function of the target-layer activation alone.
    pub fn head_logits(&self, target_activation: &Tensor) -> Result<[f64; 2]> {
        if target_activation.shape() != TARGET_SHAPE {
            return Err(Error::shapes(target_activation.shape(), TARGET_SHAPE));
        }
        let pooled = ops::global_avg_pool(target_activation).into_data();
        let z = ops::affine(&pooled, &self.fc.weight, &self.fc.bias)?;
        Ok([z[0], z[1]])
    }

    /// `∂ logit[target_class] / ∂ A` where `A` is the conv3 activation
    /// recorded in `trace`. The pre-softmax logit serves as the class score.
    pub fn class_gradients(&self, trace: &ForwardTrace, target_class: usize) -> Result<Tensor> {
        if target_class >= NUM_CLASSES {
            return Err(Error::invalid(format!(
                "target class {target_class} is not 0 (live) or 1 (spoof)"
            )));
        }
        let mut seed = [0.0; NUM_CLASSES];
        seed[target_class] = 1.0;
        let head = ops::affine_backward(&seed, &trace.pooled, &self.fc.weight)?;
        let pooled_grad = Tensor::from_parts(Shape::new(1, TARGET_CHANNELS, 1, 1), head.input);
        ops::global_avg_pool_backward(&pooled_grad, trace.conv3.shape())
    }

    /// Cross-entropy loss of `trace` against `label` and the gradient of that
    /// loss with respect to every parameter, packed in a `SmallCnn`.
    pub fn loss_gradients(&self, trace: &ForwardTrace, label: Label) -> Result<(f64, SmallCnn)> {
        let y = label.index();
        let loss = ops::cross_entropy(&trace.probabilities, y)?;
        let dlogits = ops::softmax_cross_entropy_backward(&trace.probabilities, y)?;

        let fc = ops::affine_backward(&dlogits, &trace.pooled, &self.fc.weight)?;
        let pooled_grad = Tensor::from_parts(Shape::new(1, TARGET_CHANNELS, 1, 1), fc.input);
        let g3 = ops::global_avg_pool_backward(&pooled_grad, trace.conv3.shape())?;
        let g3 = ops::relu_backward(&g3, &trace.conv3)?;
        let c3 = ops::conv2d_backward(&g3, &trace.pool2, &self.conv3.weight, 1, 1)?;

        let g2 = ops::maxpool2_backward(&c3.input.expect("input gradient requested"), &trace.pool2_idx)?;
        let g2 = ops::relu_backward(&g2, &trace.conv2)?;
        let c2 = ops::conv2d_backward(&g2, &trace.pool1, &self.conv2.weight, 1, 1)?;

        let g1 = ops::maxpool2_backward(&c2.input.expect("input gradient requested"), &trace.pool1_idx)?;
        let g1 = ops::relu_backward(&g1, &trace.conv1)?;
        let c1 = ops::conv2d_backward_params(&g1, &trace.input, &self.conv1.weight, 1, 1)?;

        let grads = SmallCnn {
            conv1: ConvLayer { weight: c1.kernels, bias: c1.bias },
            conv2: ConvLayer { weight: c2.kernels, bias: c2.bias },
            conv3: ConvLayer { weight: c3.kernels, bias: c3.bias },
            fc: Linear { weight: fc.weights, bias: fc.bias },
        };
        Ok((loss, grads))
    }
}

/// Argmax of the logits; a tie goes to class 0 (live).
pub fn predict(logits: &[f64; 2]) -> Label {
    if logits[1] > logits[0] {
        Label::Spoof
    } else {
        Label::Live
    }
}

/// Everything recorded by one forward pass. Activations are post-ReLU.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub input: Tensor,
    pub conv1: Tensor,
    pub pool1: Tensor,
    pub conv2: Tensor,
    pub pool2: Tensor,
    /// Target layer for explanations.
    pub conv3: Tensor,
    pub pooled: Vec<f64>,
    pub logits: [f64; 2],
    pub probabilities: [f64; 2],
    pub predicted_class: Label,
    /// Probability of `predicted_class`.
    pub confidence: f64,
    pool1_idx: ops::PoolIndices,
    pool2_idx: ops::PoolIndices,
}

impl ForwardTrace {
    pub fn target_activation(&self) -> &Tensor {
        &self.conv3
    }

    pub fn layers(&self) -> [(&'static str, &Tensor); 5] {
        [
            ("conv1", &self.conv1),
            ("pool1", &self.pool1),
            ("conv2", &self.conv2),
            ("pool2", &self.pool2),
            ("conv3", &self.conv3),
        ]
    }
}
