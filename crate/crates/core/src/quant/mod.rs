//! Post-training int8 quantization.
//!
//! Weights are symmetric per-tensor (`zero_point = 0`, `scale = max|w|/127`);
//! activations are affine per-tensor from calibrated ranges; biases are
//! int32 at `input_scale * weight_scale`. The softmax stays in float.

mod budget;
mod calibrate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use budget::{budget_report, ram_breakdown, BudgetReport, RamBreakdown, FLASH_BUDGET, RAM_BUDGET};
pub use calibrate::{calibrate, ActivationRanges, MIN_CALIBRATION_ROWS};

use crate::model::{softmax, ModelError, ModelParams, Topology};

/// Largest supported layer width; also the blob format's `u16` limit.
pub const MAX_DIM: usize = u16::MAX as usize;
/// Worst-case |q - zero_point| for int8 inputs times |w| for int8 weights.
const MAX_PRODUCT: i64 = 255 * 127;

#[derive(Debug, Error)]
pub enum QuantError {
    #[error("empty calibration set")]
    EmptyCalibration,
    #[error("calibration needs at least {min} rows, got {found}")]
    TooFewCalibrationRows { min: usize, found: usize },
    #[error("calibration ranges cover {found} boundaries, model has {expected}")]
    RangeMismatch { expected: usize, found: usize },
    #[error("dimension {0} exceeds {MAX_DIM}")]
    DimTooLarge(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `real = scale * (q - zero_point)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantParams {
    pub scale: f32,
    pub zero_point: i8,
}

impl QuantParams {
    /// Symmetric params for a tensor whose largest magnitude is `max_abs`;
    /// an all-zero tensor gets scale 1.
    pub fn symmetric(max_abs: f64) -> Self {
        let scale = if max_abs > 0.0 { (max_abs / 127.0) as f32 } else { 1.0 };
        QuantParams {
            scale,
            zero_point: 0,
        }
    }

    /// Affine params covering `[lo, hi]` (extended to include 0).
    pub fn affine(lo: f64, hi: f64) -> Self {
        let (lo, hi) = (lo.min(0.0), hi.max(0.0));
        let scale = ((hi - lo) / 255.0) as f32;
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let zp = (-128.0 - lo / f64::from(scale)).round().clamp(-128.0, 127.0);
        QuantParams {
            scale,
            zero_point: zp as i8,
        }
    }

    pub fn quantize(&self, x: f64) -> i8 {
        let q = (x / f64::from(self.scale)).round() + f64::from(self.zero_point);
        q.clamp(-128.0, 127.0) as i8
    }

    pub fn dequantize(&self, q: i8) -> f64 {
        f64::from(self.scale) * (i32::from(q) - i32::from(self.zero_point)) as f64
    }
}

/// Symmetric int8 quantization of a whole tensor.
pub fn quantize_tensor(values: &[f64]) -> (Vec<i8>, QuantParams) {
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let p = QuantParams::symmetric(max_abs);
    (values.iter().map(|&v| p.quantize(v)).collect(), p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight_params: QuantParams,
    /// Row-major `out x in`.
    pub weights: Vec<i8>,
    pub bias: Vec<i32>,
}

impl QuantLayer {
    pub fn row(&self, o: usize) -> &[i8] {
        &self.weights[o * self.in_dim..(o + 1) * self.in_dim]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedModel {
    pub topology: Topology,
    pub layers: Vec<QuantLayer>,
    /// Input params of each layer: `[0]` for the normalized features, then
    /// one per hidden-layer output. Logits are never quantized.
    pub activations: Vec<QuantParams>,
    pub norm_mean: Vec<f32>,
    pub norm_std: Vec<f32>,
    pub labels: Vec<String>,
}

/// Affine params of a relu output whose pre-activation peaked at `hi`.
fn relu_params(hi: f64) -> QuantParams {
    QuantParams::affine(0.0, hi.max(1e-6))
}

pub fn quantize(params: &ModelParams, ranges: &ActivationRanges) -> Result<QuantizedModel, QuantError> {
    let n_layers = params.layers.len();
    if ranges.ranges.len() != n_layers + 1 {
        return Err(QuantError::RangeMismatch {
            expected: n_layers + 1,
            found: ranges.ranges.len(),
        });
    }
    if let Some(&d) = params.topology.dims().iter().find(|&&d| d > MAX_DIM) {
        return Err(QuantError::DimTooLarge(d));
    }
    let mut activations = Vec::with_capacity(n_layers);
    let (lo, hi) = ranges.ranges[0];
    activations.push(QuantParams::affine(lo, hi));
    for &(_, hi) in &ranges.ranges[1..n_layers] {
        activations.push(relu_params(hi));
    }

    let layers = params
        .layers
        .iter()
        .zip(&activations)
        .map(|(layer, input)| {
            let (weights, weight_params) = quantize_tensor(&layer.weights);
            let acc_scale = f64::from(input.scale) * f64::from(weight_params.scale);
            let limit = i64::from(i32::MAX) - layer.in_dim as i64 * MAX_PRODUCT;
            let bias = layer
                .bias
                .iter()
                .map(|b| ((b / acc_scale).round() as i64).clamp(-limit, limit) as i32)
                .collect();
            QuantLayer {
                in_dim: layer.in_dim,
                out_dim: layer.out_dim,
                weight_params,
                weights,
                bias,
            }
        })
        .collect();

    Ok(QuantizedModel {
        topology: params.topology.clone(),
        layers,
        activations,
        norm_mean: params.norm.mean.iter().map(|&v| v as f32).collect(),
        norm_std: params.norm.std.iter().map(|&v| v as f32).collect(),
        labels: params.labels.clone(),
    })
}

impl QuantizedModel {
    pub fn input_dim(&self) -> usize {
        self.topology.input_dim
    }

    /// Class probabilities through the integer path.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>, QuantError> {
        if features.len() != self.input_dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.input_dim(),
                found: features.len(),
            }
            .into());
        }
        let input = self.activations[0];
        let mut q: Vec<i8> = features
            .iter()
            .zip(self.norm_mean.iter().zip(&self.norm_std))
            .map(|(v, (m, s))| input.quantize((v - f64::from(*m)) / f64::from(*s)))
            .collect();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let in_p = self.activations[l];
            assert!(
                layer.in_dim as i64 * MAX_PRODUCT < i64::from(i32::MAX),
                "layer too wide for i32 accumulation"
            );
            let zp = i32::from(in_p.zero_point);
            let acc: Vec<i32> = (0..layer.out_dim)
                .map(|o| {
                    layer.row(o).iter().zip(&q).fold(layer.bias[o], |acc, (&w, &x)| {
                        acc + i32::from(w) * (i32::from(x) - zp)
                    })
                })
                .collect();
            let acc_scale = f64::from(in_p.scale) * f64::from(layer.weight_params.scale);
            if l == last {
                let logits: Vec<f64> = acc.iter().map(|&a| f64::from(a) * acc_scale).collect();
                return Ok(softmax(&logits));
            }
            let out_p = self.activations[l + 1];
            q = acc
                .iter()
                .map(|&a| out_p.quantize(f64::from(a) * acc_scale).max(out_p.zero_point))
                .collect();
        }
        unreachable!("model has at least one layer")
    }
}

/// Free-function form of [`QuantizedModel::forward`].
pub fn q_forward(qm: &QuantizedModel, features: &[f64]) -> Result<Vec<f64>, QuantError> {
    qm.forward(features)
}
