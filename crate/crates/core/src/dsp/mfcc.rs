use std::f64::consts::PI;

use super::{DspConfig, DspError, FeatureVector, Fft, MfccConfig, LOG_FLOOR};
use crate::dataset::LabeledWindow;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Hamming window, mel filterbank and DCT basis for one config.
#[derive(Debug, Clone)]
pub struct MfccExtractor {
    cfg: MfccConfig,
    fft: Fft,
    window: Vec<f64>,
    /// `mel_filters` rows of `fft_len/2 + 1` weights.
    filterbank: Vec<Vec<f64>>,
    /// `coefficients` rows of `mel_filters` orthonormal DCT-II weights.
    dct: Vec<Vec<f64>>,
    layout_id: String,
}

impl MfccExtractor {
    pub fn new(cfg: MfccConfig, sample_rate: f64) -> Result<Self, DspError> {
        cfg.validate()?;
        let frame = cfg.frame_len as usize;
        let fft_len = cfg.fft_len as usize;
        let mels = cfg.mel_filters as usize;
        let window = (0..frame)
            .map(|n| {
                if frame == 1 {
                    1.0
                } else {
                    0.54 - 0.46 * (2.0 * PI * n as f64 / (frame - 1) as f64).cos()
                }
            })
            .collect();

        let mel_max = hz_to_mel(sample_rate / 2.0);
        let edges: Vec<f64> = (0..mels + 2)
            .map(|i| mel_to_hz(mel_max * i as f64 / (mels + 1) as f64))
            .collect();
        let filterbank = (0..mels)
            .map(|m| {
                let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                (0..=fft_len / 2)
                    .map(|k| {
                        let f = k as f64 * sample_rate / fft_len as f64;
                        if f > lo && f <= mid {
                            (f - lo) / (mid - lo)
                        } else if f > mid && f < hi {
                            (hi - f) / (hi - mid)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();

        let dct = (0..cfg.coefficients as usize)
            .map(|k| {
                let norm = if k == 0 { (1.0 / mels as f64).sqrt() } else { (2.0 / mels as f64).sqrt() };
                (0..mels)
                    .map(|m| norm * (PI * k as f64 * (m as f64 + 0.5) / mels as f64).cos())
                    .collect()
            })
            .collect();

        Ok(MfccExtractor {
            cfg,
            fft: Fft::new(fft_len)?,
            window,
            filterbank,
            dct,
            layout_id: DspConfig::Mfcc(cfg).layout_id(),
        })
    }

    pub fn extract(&self, window: &LabeledWindow) -> Result<FeatureVector, DspError> {
        Ok(FeatureVector {
            values: self.extract_raw(&window.data, window.channels)?,
            layout_id: self.layout_id.clone(),
        })
    }

    pub fn extract_raw(&self, data: &[f64], channels: usize) -> Result<Vec<f64>, DspError> {
        if channels != 1 {
            return Err(DspError::BadChannels {
                expected: 1,
                found: channels,
            });
        }
        let frame_len = self.cfg.frame_len as usize;
        let frames = self.cfg.frame_count(data.len());
        if frames == 0 {
            return Err(DspError::WindowTooShort {
                len: data.len(),
                frame: frame_len,
            });
        }
        let stride = self.cfg.frame_stride as usize;
        let fft_len = self.cfg.fft_len as usize;
        let mut out = Vec::with_capacity(frames * self.dct.len());
        let mut buf = vec![0.0; fft_len];
        let mut scratch = Vec::with_capacity(fft_len);
        let mut log_mel = vec![0.0; self.filterbank.len()];
        for f in 0..frames {
            let start = f * stride;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = if i < frame_len { data[start + i] * self.window[i] } else { 0.0 };
            }
            let spectrum = self.fft.real_forward(&buf, &mut scratch);
            for (lm, filt) in log_mel.iter_mut().zip(&self.filterbank) {
                let e: f64 = filt.iter().zip(&spectrum).map(|(w, c)| w * c.norm_sqr()).sum();
                *lm = (e + LOG_FLOOR).ln();
            }
            out.extend(
                self.dct
                    .iter()
                    .map(|row| row.iter().zip(&log_mel).map(|(d, l)| d * l).sum::<f64>()),
            );
        }
        Ok(out)
    }
}

pub fn mfcc(win: &LabeledWindow, cfg: &MfccConfig, sample_rate: f64) -> Result<FeatureVector, DspError> {
    MfccExtractor::new(*cfg, sample_rate)?.extract(win)
}
