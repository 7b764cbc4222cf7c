//! Small fully-connected softmax classifier (relu hidden layers).

mod eval;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eval::{evaluate, evaluate_with, EvalReport};
pub use train::{
    augment, batch_loss, gradients, train, train_step, Batch, EpochStats, History, LayerGrad,
    TrainConfig, AUGMENT_SIGMA,
};

use crate::dsp::NormStats;

/// Lower clamp on the true-class probability inside the loss.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("training needs at least 2 classes, found {0}")]
    SingleClass(usize),
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("model file: {0}")]
    Serde(#[from] serde_json::Error),
}

/// Layer widths; hidden layers use relu, the output layer feeds softmax.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
}

impl Topology {
    pub fn new(input_dim: usize, hidden: Vec<usize>, output_dim: usize) -> Result<Self, ModelError> {
        let t = Topology {
            input_dim,
            hidden,
            output_dim,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.dims().contains(&0) {
            return Err(ModelError::InvalidTopology(format!(
                "all dims must be >= 1: {:?}",
                self.dims()
            )));
        }
        Ok(())
    }

    /// `[input, hidden..., output]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.hidden.len() + 2);
        d.push(self.input_dim);
        d.extend(&self.hidden);
        d.push(self.output_dim);
        d
    }

    pub fn n_layers(&self) -> usize {
        self.hidden.len() + 1
    }

    pub fn param_count(&self) -> usize {
        self.dims().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Dense layer, `weights` row-major `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        DenseLayer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.in_dim..(o + 1) * self.in_dim]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.out_dim)
            .map(|o| {
                self.row(o)
                    .iter()
                    .zip(x)
                    .fold(self.bias[o], |acc, (w, v)| acc + w * v)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub topology: Topology,
    pub layers: Vec<DenseLayer>,
    pub norm: NormStats,
    pub labels: Vec<String>,
    /// Feature layout the model was trained on.
    pub layout_id: String,
}

impl ModelParams {
    /// He-style uniform init, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero
    /// biases. Normalization starts as identity and labels as `class<i>`.
    pub fn init(topology: &Topology, seed: u64) -> Result<Self, ModelError> {
        topology.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = topology
            .dims()
            .windows(2)
            .map(|w| {
                let (fan_in, out) = (w[0], w[1]);
                let bound = (6.0 / fan_in as f64).sqrt();
                let mut layer = DenseLayer::zeros(fan_in, out);
                layer
                    .weights
                    .iter_mut()
                    .for_each(|v| *v = rng.random_range(-bound..bound));
                layer
            })
            .collect();
        Ok(ModelParams {
            topology: topology.clone(),
            layers,
            norm: NormStats::identity(topology.input_dim),
            labels: (0..topology.output_dim).map(|i| format!("class{i}")).collect(),
            layout_id: String::new(),
        })
    }

    fn check_dim(&self, features: &[f64]) -> Result<(), ModelError> {
        if features.len() != self.topology.input_dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.topology.input_dim,
                found: features.len(),
            });
        }
        Ok(())
    }

    /// Logits for an already-normalized input.
    pub fn logits_normalized(&self, x: &[f64]) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut a = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            a = layer.apply(&a);
            if i < last {
                a.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        a
    }

    pub fn forward_normalized(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits_normalized(x))
    }

    /// Class probabilities for raw (un-normalized) features.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_dim(features)?;
        Ok(self.forward_normalized(&self.norm.apply(features)))
    }

    /// Cross-entropy of one raw feature vector against `label`.
    pub fn loss(&self, features: &[f64], label: usize) -> Result<f64, ModelError> {
        let p = self.forward(features)?;
        Ok(cross_entropy(&p, label))
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let p: ModelParams = serde_json::from_str(text)?;
        p.topology.validate()?;
        let dims = p.topology.dims();
        let shapes_ok = p.layers.len() == p.topology.n_layers()
            && p.layers.iter().zip(dims.windows(2)).all(|(l, w)| {
                l.in_dim == w[0]
                    && l.out_dim == w[1]
                    && l.weights.len() == w[0] * w[1]
                    && l.bias.len() == w[1]
            })
            && p.norm.mean.len() == p.topology.input_dim
            && p.norm.std.len() == p.topology.input_dim
            && p.labels.len() == p.topology.output_dim;
        if !shapes_ok {
            return Err(ModelError::InvalidTopology("layer shapes disagree with topology".into()));
        }
        Ok(p)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn cross_entropy(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(PROB_FLOOR).ln()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}
