//! Feature extraction: spectral analysis for IMU windows, MFCC for audio.

mod features;
mod fft;
mod filter;
mod mfcc;
mod spectral;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{featurize, FeatureMatrix, NormStats};
pub use fft::{fft_real, Fft};
pub use filter::{lowpass, Butterworth};
pub use mfcc::{hz_to_mel, mel_to_hz, mfcc, MfccExtractor};
pub use spectral::{spectral_features, SpectralExtractor};

use crate::dataset::{DatasetKind, LabeledWindow};

/// Floor added before taking logs of power values.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("length {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),
    #[error("cutoff {cutoff} Hz outside (0, {nyquist})")]
    CutoffOutOfRange { cutoff: f64, nyquist: f64 },
    #[error("expected {expected} channels, found {found}")]
    BadChannels { expected: usize, found: usize },
    #[error("window of {len} samples is shorter than one frame ({frame})")]
    WindowTooShort { len: usize, frame: usize },
    #[error("no windows")]
    NoWindows,
    #[error("invalid dsp config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralConfig {
    pub scale: f32,
    /// Low-pass cutoff in Hz.
    pub filter_cutoff: f32,
    pub filter_order: u32,
    pub fft_len: u32,
    pub power_bins: u32,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            scale: 1.0,
            filter_cutoff: 8.0,
            filter_order: 2,
            fft_len: 128,
            power_bins: 16,
        }
    }
}

impl SpectralConfig {
    pub fn validate(&self, sample_rate: f64) -> Result<(), DspError> {
        let bad = |m: String| Err(DspError::InvalidConfig(m));
        if !(self.fft_len >= 2 && self.fft_len.is_power_of_two()) {
            return Err(DspError::NotPowerOfTwo(self.fft_len as usize));
        }
        if self.power_bins == 0 || self.power_bins > self.fft_len / 2 {
            return bad(format!("power_bins {} not in 1..={}", self.power_bins, self.fft_len / 2));
        }
        if self.filter_order == 0 {
            return bad("filter_order must be positive".into());
        }
        if !self.scale.is_finite() {
            return bad("scale must be finite".into());
        }
        let nyquist = sample_rate / 2.0;
        let cutoff = f64::from(self.filter_cutoff);
        if !(cutoff > 0.0 && cutoff < nyquist) {
            return Err(DspError::CutoffOutOfRange { cutoff, nyquist });
        }
        Ok(())
    }

    pub fn feature_len(&self) -> usize {
        3 * (1 + self.power_bins as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    pub frame_len: u32,
    pub frame_stride: u32,
    pub mel_filters: u32,
    pub coefficients: u32,
    pub fft_len: u32,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            frame_len: 512,
            frame_stride: 256,
            mel_filters: 26,
            coefficients: 13,
            fft_len: 512,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        let bad = |m: String| Err(DspError::InvalidConfig(m));
        if !(self.fft_len >= 2 && self.fft_len.is_power_of_two()) {
            return Err(DspError::NotPowerOfTwo(self.fft_len as usize));
        }
        if self.frame_len == 0 || self.frame_len > self.fft_len {
            return bad(format!("frame_len {} not in 1..={}", self.frame_len, self.fft_len));
        }
        if self.frame_stride == 0 {
            return bad("frame_stride must be positive".into());
        }
        if self.mel_filters == 0 || self.coefficients == 0 || self.coefficients > self.mel_filters {
            return bad(format!(
                "need 1 <= coefficients ({}) <= mel_filters ({})",
                self.coefficients, self.mel_filters
            ));
        }
        Ok(())
    }

    pub fn frame_count(&self, len: usize) -> usize {
        let frame = self.frame_len as usize;
        if len < frame {
            0
        } else {
            1 + (len - frame) / self.frame_stride as usize
        }
    }

    pub fn feature_len(&self, len: usize) -> usize {
        self.frame_count(len) * self.coefficients as usize
    }
}

/// Which preprocessing block a model was trained behind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "block", rename_all = "lowercase")]
pub enum DspConfig {
    Spectral(SpectralConfig),
    Mfcc(MfccConfig),
}

impl DspConfig {
    pub fn default_for(kind: DatasetKind) -> Self {
        match kind {
            DatasetKind::Gesture => DspConfig::Spectral(SpectralConfig::default()),
            DatasetKind::Keyword => DspConfig::Mfcc(MfccConfig::default()),
        }
    }

    pub fn kind(&self) -> DatasetKind {
        match self {
            DspConfig::Spectral(_) => DatasetKind::Gesture,
            DspConfig::Mfcc(_) => DatasetKind::Keyword,
        }
    }

    pub fn validate(&self) -> Result<(), DspError> {
        match self {
            DspConfig::Spectral(c) => c.validate(self.kind().sample_rate()),
            DspConfig::Mfcc(c) => c.validate(),
        }
    }

    /// Feature vector length for a window of the kind's fixed size.
    pub fn feature_len(&self) -> usize {
        match self {
            DspConfig::Spectral(c) => c.feature_len(),
            DspConfig::Mfcc(c) => c.feature_len(self.kind().window_len()),
        }
    }

    /// Identifies the feature layout produced by this config.
    pub fn layout_id(&self) -> String {
        let kind = self.kind();
        match self {
            DspConfig::Spectral(c) => format!(
                "spectral/v1 ch={} sr={} win={} scale={} cutoff={} order={} fft={} bins={} pad=truncate",
                kind.channels(),
                kind.sample_rate(),
                kind.window_len(),
                c.scale,
                c.filter_cutoff,
                c.filter_order,
                c.fft_len,
                c.power_bins
            ),
            DspConfig::Mfcc(c) => format!(
                "mfcc/v1 ch={} sr={} win={} frame={} stride={} mels={} coeffs={} fft={}",
                kind.channels(),
                kind.sample_rate(),
                kind.window_len(),
                c.frame_len,
                c.frame_stride,
                c.mel_filters,
                c.coefficients,
                c.fft_len
            ),
        }
    }

    pub fn extractor(&self) -> Result<Extractor, DspError> {
        let sr = self.kind().sample_rate();
        Ok(match self {
            DspConfig::Spectral(c) => Extractor::Spectral(SpectralExtractor::new(*c, sr)?),
            DspConfig::Mfcc(c) => Extractor::Mfcc(MfccExtractor::new(*c, sr)?),
        })
    }
}

/// A prepared feature block (filter taps, FFT plan, mel bank) that can be
/// reused across windows.
#[derive(Debug, Clone)]
pub enum Extractor {
    Spectral(SpectralExtractor),
    Mfcc(MfccExtractor),
}

impl Extractor {
    pub fn extract(&self, window: &LabeledWindow) -> Result<FeatureVector, DspError> {
        match self {
            Extractor::Spectral(e) => e.extract(window),
            Extractor::Mfcc(e) => e.extract(window),
        }
    }

    /// Features of a bare channel-major buffer with `channels` channels.
    pub fn extract_raw(&self, data: &[f64], channels: usize) -> Result<Vec<f64>, DspError> {
        match self {
            Extractor::Spectral(e) => e.extract_raw(data, channels),
            Extractor::Mfcc(e) => e.extract_raw(data, channels),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout_id: String,
}
