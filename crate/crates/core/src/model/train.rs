use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{argmax, cross_entropy, softmax, ModelError, ModelParams, Topology};
use crate::dsp::{FeatureMatrix, NormStats};

/// Std-dev of the feature-space noise used for augmentation, in units of
/// the normalized features.
pub const AUGMENT_SIGMA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub augment: bool,
    /// Training predictions below this top-class probability are reported
    /// as low-confidence.
    pub confidence_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 16,
            learning_rate: 0.005,
            seed: 42,
            augment: true,
            confidence_threshold: 0.91,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.confidence_threshold > 0.0 && self.confidence_threshold < 1.0) {
            return bad("confidence_threshold must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Normalized inputs and their label indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Gradient of the mean batch loss for one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Mean cross-entropy over a batch of normalized inputs.
pub fn batch_loss(params: &ModelParams, batch: &Batch) -> f64 {
    let total: f64 = batch
        .inputs
        .iter()
        .zip(&batch.labels)
        .map(|(x, &y)| cross_entropy(&params.forward_normalized(x), y))
        .sum();
    total / batch.len() as f64
}

/// Mean batch loss and its gradient w.r.t. every weight and bias, by
/// backpropagation. Samples are accumulated in batch order.
pub fn gradients(params: &ModelParams, batch: &Batch) -> (f64, Vec<LayerGrad>) {
    let mut grads: Vec<LayerGrad> = params
        .layers
        .iter()
        .map(|l| LayerGrad {
            weights: vec![0.0; l.weights.len()],
            bias: vec![0.0; l.bias.len()],
        })
        .collect();
    let last = params.layers.len() - 1;
    let mut total_loss = 0.0;
    for (x, &y) in batch.inputs.iter().zip(&batch.labels) {
        // activations[l] is the input of layer l; pre[l] its output before relu
        let mut activations = vec![x.clone()];
        let mut pre = Vec::with_capacity(params.layers.len());
        for (i, layer) in params.layers.iter().enumerate() {
            let z = layer.apply(activations.last().expect("non-empty"));
            if i < last {
                activations.push(z.iter().map(|v| v.max(0.0)).collect());
            }
            pre.push(z);
        }
        let probs = softmax(&pre[last]);
        total_loss += cross_entropy(&probs, y);

        let mut delta = probs;
        delta[y] -= 1.0;
        for l in (0..params.layers.len()).rev() {
            let layer = &params.layers[l];
            let input = &activations[l];
            let g = &mut grads[l];
            for (o, &d) in delta.iter().enumerate() {
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (gw, a) in row.iter_mut().zip(input) {
                    *gw += d * a;
                }
            }
            if l > 0 {
                let mut back = vec![0.0; layer.in_dim];
                for (o, &d) in delta.iter().enumerate() {
                    for (b, w) in back.iter_mut().zip(layer.row(o)) {
                        *b += w * d;
                    }
                }
                for (b, z) in back.iter_mut().zip(&pre[l - 1]) {
                    if *z <= 0.0 {
                        *b = 0.0;
                    }
                }
                delta = back;
            }
        }
    }
    let n = batch.len() as f64;
    for g in &mut grads {
        g.weights.iter_mut().for_each(|v| *v /= n);
        g.bias.iter_mut().for_each(|v| *v /= n);
    }
    (total_loss / n, grads)
}

/// One SGD step on `batch`; returns the mean batch loss before the update.
pub fn train_step(params: &mut ModelParams, batch: &Batch, learning_rate: f64) -> Result<f64, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::Empty("batch"));
    }
    let (loss, grads) = gradients(params, batch);
    if learning_rate != 0.0 {
        for (layer, g) in params.layers.iter_mut().zip(&grads) {
            for (w, d) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= learning_rate * d;
            }
            for (b, d) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * d;
            }
        }
    }
    Ok(loss)
}

/// Adds `N(0, AUGMENT_SIGMA)` noise to every normalized feature. Labels are
/// untouched; with `enabled == false` the batch is returned as-is.
pub fn augment(batch: &Batch, seed: u64, enabled: bool) -> Batch {
    if !enabled {
        return batch.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, AUGMENT_SIGMA).expect("valid sigma");
    Batch {
        inputs: batch
            .inputs
            .iter()
            .map(|x| x.iter().map(|v| v + noise.sample(&mut rng)).collect())
            .collect(),
        labels: batch.labels.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    /// Training rows whose final top-class probability is below the
    /// configured confidence threshold.
    pub low_confidence: usize,
    pub confidence_threshold: f64,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,accuracy\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{:.6},{:.6}\n", e.epoch, e.loss, e.accuracy));
        }
        out
    }

    pub fn final_accuracy(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.accuracy)
    }
}

/// Mini-batch SGD over normalized training features. The network is
/// initialized from `cfg.seed`; each epoch reshuffles and, if enabled,
/// augments every batch with fresh noise.
pub fn train(
    features: &FeatureMatrix,
    stats: &NormStats,
    hidden: &[usize],
    cfg: &TrainConfig,
) -> Result<(ModelParams, History), ModelError> {
    cfg.validate()?;
    if features.is_empty() {
        return Err(ModelError::Empty("training set"));
    }
    let mut present: Vec<usize> = features.labels.clone();
    present.sort_unstable();
    present.dedup();
    if features.label_names.len() < 2 || present.len() < 2 {
        return Err(ModelError::SingleClass(present.len()));
    }
    let topology = Topology::new(features.width(), hidden.to_vec(), features.label_names.len())?;
    let mut params = ModelParams::init(&topology, cfg.seed)?;
    params.norm = stats.clone();
    params.labels = features.label_names.clone();
    params.layout_id = features.layout_id.clone();

    let inputs: Vec<Vec<f64>> = features.rows.iter().map(|r| stats.apply(r)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = Batch {
                inputs: chunk.iter().map(|&i| inputs[i].clone()).collect(),
                labels: chunk.iter().map(|&i| features.labels[i]).collect(),
            };
            let batch = augment(&batch, rng.random(), cfg.augment);
            loss_sum += train_step(&mut params, &batch, cfg.learning_rate)? * chunk.len() as f64;
        }
        let correct = inputs
            .iter()
            .zip(&features.labels)
            .filter(|(x, &y)| argmax(&params.forward_normalized(x)) == y)
            .count();
        history.push(EpochStats {
            epoch: epoch + 1,
            loss: loss_sum / inputs.len() as f64,
            accuracy: correct as f64 / inputs.len() as f64,
        });
    }
    let low_confidence = inputs
        .iter()
        .filter(|x| {
            params
                .forward_normalized(x)
                .iter()
                .copied()
                .fold(0.0, f64::max)
                < cfg.confidence_threshold
        })
        .count();
    Ok((
        params,
        History {
            epochs: history,
            low_confidence,
            confidence_threshold: cfg.confidence_threshold,
        },
    ))
}
