use std::fmt;

use serde::{Deserialize, Serialize};

use super::QuantizedModel;
use crate::dsp::DspConfig;
use crate::runtime::{blob, RuntimeConfig};

/// Flash available for the deployed model: 1 MB.
pub const FLASH_BUDGET: usize = 1_048_576;
/// RAM available at run time: 256 KB.
pub const RAM_BUDGET: usize = 262_144;

/// Bytes the streaming runtime holds resident while classifying.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RamBreakdown {
    /// Ring buffer of one window, f32 per sample.
    pub input_window: usize,
    /// FFT buffer (complex f32) plus the f32 feature vector.
    pub dsp_scratch: usize,
    /// Largest int8 in+out pair plus its i32 accumulators.
    pub activations: usize,
    /// Loaded int8 weights, i32 biases and f32 normalization vectors.
    pub model_tensors: usize,
    /// Smoother history, K f32 probability vectors.
    pub smoother: usize,
}

impl RamBreakdown {
    pub fn total(&self) -> usize {
        self.input_window + self.dsp_scratch + self.activations + self.model_tensors + self.smoother
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub flash_bytes: usize,
    pub ram_bytes: usize,
    pub flash_budget: usize,
    pub ram_budget: usize,
    pub fits: bool,
    pub ram: RamBreakdown,
}

pub fn ram_breakdown(qm: &QuantizedModel, dsp: &DspConfig, rt: &RuntimeConfig) -> RamBreakdown {
    let kind = dsp.kind();
    let fft_len = match dsp {
        DspConfig::Spectral(c) => c.fft_len,
        DspConfig::Mfcc(c) => c.fft_len,
    } as usize;
    let dims = qm.topology.dims();
    let activations = qm
        .layers
        .iter()
        .map(|l| l.in_dim + l.out_dim + 4 * l.out_dim)
        .max()
        .unwrap_or(0);
    let model_tensors = qm
        .layers
        .iter()
        .map(|l| l.weights.len() + 4 * l.bias.len())
        .sum::<usize>()
        + 8 * qm.input_dim();
    RamBreakdown {
        input_window: 4 * kind.channels() * kind.window_len(),
        dsp_scratch: 8 * fft_len + 4 * dims[0],
        activations,
        model_tensors,
        smoother: 4 * usize::from(rt.smoothing) * dims[dims.len() - 1],
    }
}

/// Flash is the serialized blob size; RAM is what the streaming runtime
/// keeps resident (see [`RamBreakdown`]).
pub fn budget_report(qm: &QuantizedModel, dsp: &DspConfig, rt: &RuntimeConfig) -> BudgetReport {
    let flash_bytes = blob::encoded_len(qm, dsp, rt);
    let ram = ram_breakdown(qm, dsp, rt);
    let ram_bytes = ram.total();
    BudgetReport {
        flash_bytes,
        ram_bytes,
        flash_budget: FLASH_BUDGET,
        ram_budget: RAM_BUDGET,
        fits: flash_bytes <= FLASH_BUDGET && ram_bytes <= RAM_BUDGET,
        ram,
    }
}

impl BudgetReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for BudgetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |a: usize, b: usize| 100.0 * a as f64 / b as f64;
        writeln!(f, "{:<16} {:>10} {:>10} {:>7}", "resource", "used", "budget", "use%")?;
        writeln!(
            f,
            "{:<16} {:>10} {:>10} {:>6.2}%",
            "flash",
            self.flash_bytes,
            self.flash_budget,
            pct(self.flash_bytes, self.flash_budget)
        )?;
        writeln!(
            f,
            "{:<16} {:>10} {:>10} {:>6.2}%",
            "ram",
            self.ram_bytes,
            self.ram_budget,
            pct(self.ram_bytes, self.ram_budget)
        )?;
        for (name, v) in [
            ("  input window", self.ram.input_window),
            ("  dsp scratch", self.ram.dsp_scratch),
            ("  activations", self.ram.activations),
            ("  model tensors", self.ram.model_tensors),
            ("  smoother", self.ram.smoother),
        ] {
            writeln!(f, "{name:<16} {v:>10}")?;
        }
        writeln!(f, "fits: {}", self.fits)
    }
}
