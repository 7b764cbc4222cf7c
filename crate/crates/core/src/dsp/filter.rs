use std::f64::consts::PI;

use super::DspError;

/// One transposed direct-form II section; first-order sections leave
/// `b2`/`a2` at zero.
#[derive(Debug, Clone, Copy)]
struct Section {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Section {
    fn run(&self, signal: &mut [f64]) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in signal.iter_mut() {
            let x = *v;
            let y = self.b0 * x + s1;
            s1 = self.b1 * x - self.a1 * y + s2;
            s2 = self.b2 * x - self.a2 * y;
            *v = y;
        }
    }
}

/// Digital Butterworth low-pass as a cascade of bilinear-transformed
/// sections (prewarped at the cutoff).
#[derive(Debug, Clone)]
pub struct Butterworth {
    sections: Vec<Section>,
}

impl Butterworth {
    pub fn lowpass(cutoff: f64, order: usize, sample_rate: f64) -> Result<Self, DspError> {
        let nyquist = sample_rate / 2.0;
        if !(cutoff > 0.0 && cutoff < nyquist) {
            return Err(DspError::CutoffOutOfRange { cutoff, nyquist });
        }
        if order == 0 {
            return Err(DspError::InvalidConfig("filter order must be positive".into()));
        }
        let w0 = 2.0 * PI * cutoff / sample_rate;
        let (sin_w, cos_w) = w0.sin_cos();
        let mut sections = Vec::new();
        if order % 2 == 1 {
            let k = (w0 / 2.0).tan();
            sections.push(Section {
                b0: k / (1.0 + k),
                b1: k / (1.0 + k),
                b2: 0.0,
                a1: (k - 1.0) / (k + 1.0),
                a2: 0.0,
            });
        }
        for i in 0..order / 2 {
            // Angle of the conjugate pole pair from the negative real axis.
            let theta = if order % 2 == 0 {
                (2 * i + 1) as f64 * PI / (2 * order) as f64
            } else {
                (i + 1) as f64 * PI / order as f64
            };
            let q = 1.0 / (2.0 * theta.cos());
            let alpha = sin_w / (2.0 * q);
            let a0 = 1.0 + alpha;
            sections.push(Section {
                b0: (1.0 - cos_w) / 2.0 / a0,
                b1: (1.0 - cos_w) / a0,
                b2: (1.0 - cos_w) / 2.0 / a0,
                a1: -2.0 * cos_w / a0,
                a2: (1.0 - alpha) / a0,
            });
        }
        Ok(Butterworth { sections })
    }

    /// Causal, zero initial state.
    pub fn apply(&self, signal: &[f64]) -> Vec<f64> {
        let mut out = signal.to_vec();
        for s in &self.sections {
            s.run(&mut out);
        }
        out
    }
}

pub fn lowpass(
    signal: &[f64],
    cutoff: f64,
    order: usize,
    sample_rate: f64,
) -> Result<Vec<f64>, DspError> {
    Ok(Butterworth::lowpass(cutoff, order, sample_rate)?.apply(signal))
}
