use super::{Butterworth, DspConfig, DspError, FeatureVector, Fft, SpectralConfig, LOG_FLOOR};
use crate::dataset::LabeledWindow;

/// Per axis: scale, low-pass, remove the mean, then emit the RMS followed by
/// `power_bins` log10 band powers of the first `fft_len` samples.
#[derive(Debug, Clone)]
pub struct SpectralExtractor {
    cfg: SpectralConfig,
    filter: Butterworth,
    fft: Fft,
    layout_id: String,
}

impl SpectralExtractor {
    pub fn new(cfg: SpectralConfig, sample_rate: f64) -> Result<Self, DspError> {
        cfg.validate(sample_rate)?;
        Ok(SpectralExtractor {
            cfg,
            filter: Butterworth::lowpass(
                f64::from(cfg.filter_cutoff),
                cfg.filter_order as usize,
                sample_rate,
            )?,
            fft: Fft::new(cfg.fft_len as usize)?,
            layout_id: DspConfig::Spectral(cfg).layout_id(),
        })
    }

    pub fn extract(&self, window: &LabeledWindow) -> Result<FeatureVector, DspError> {
        Ok(FeatureVector {
            values: self.extract_raw(&window.data, window.channels)?,
            layout_id: self.layout_id.clone(),
        })
    }

    pub fn extract_raw(&self, data: &[f64], channels: usize) -> Result<Vec<f64>, DspError> {
        if channels != 3 {
            return Err(DspError::BadChannels {
                expected: 3,
                found: channels,
            });
        }
        let n = data.len() / channels;
        let fft_len = self.cfg.fft_len as usize;
        let half = fft_len / 2;
        let bins = self.cfg.power_bins as usize;
        let scale = f64::from(self.cfg.scale);
        let mut out = Vec::with_capacity(self.cfg.feature_len());
        let mut scratch = Vec::with_capacity(fft_len);
        let mut frame = vec![0.0; fft_len];
        for c in 0..channels {
            let scaled: Vec<f64> = data[c * n..(c + 1) * n].iter().map(|v| v * scale).collect();
            let mut y = self.filter.apply(&scaled);
            let mean = if n > 0 { y.iter().sum::<f64>() / n as f64 } else { 0.0 };
            y.iter_mut().for_each(|v| *v -= mean);
            let rms = if n > 0 {
                (y.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt()
            } else {
                0.0
            };
            out.push(rms);

            frame.iter_mut().for_each(|v| *v = 0.0);
            let take = n.min(fft_len);
            frame[..take].copy_from_slice(&y[..take]);
            let spectrum = self.fft.real_forward(&frame, &mut scratch);
            for b in 0..bins {
                let (lo, hi) = (b * half / bins, (b + 1) * half / bins);
                let power: f64 = spectrum[lo..hi].iter().map(|c| c.norm_sqr()).sum::<f64>()
                    / fft_len as f64
                    / (hi - lo) as f64;
                out.push((power + LOG_FLOOR).log10());
            }
        }
        Ok(out)
    }

    /// Frequency range `[lo, hi)` in Hz covered by power bin `b`.
    pub fn bin_edges_hz(&self, b: usize, sample_rate: f64) -> (f64, f64) {
        let half = self.cfg.fft_len as usize / 2;
        let bins = self.cfg.power_bins as usize;
        let hz = sample_rate / self.cfg.fft_len as f64;
        ((b * half / bins) as f64 * hz, ((b + 1) * half / bins) as f64 * hz)
    }
}

pub fn spectral_features(
    win: &LabeledWindow,
    cfg: &SpectralConfig,
    sample_rate: f64,
) -> Result<FeatureVector, DspError> {
    SpectralExtractor::new(*cfg, sample_rate)?.extract(win)
}
