//! Reproducible synthetic recordings standing in for hand-collected data.
//!
//! Gestures are 2 s of 100 Hz accelerometer data (units of g, gravity
//! removed). Keywords are 1 s of 16 kHz audio: each color word is a fixed
//! three-band tone template under a smooth envelope, and `noise` is
//! bandlimited noise with nothing else in it.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{DatasetError, DatasetKind, Recording, GESTURE_SAMPLE_RATE, KEYWORD_SAMPLE_RATE};
use crate::dsp::lowpass;

pub const GESTURE_CLASSES: [&str; 4] = ["updown", "leftright", "circle", "idle"];
pub const KEYWORD_CLASSES: [&str; 4] = ["red", "green", "blue", "noise"];

/// Additive sensor noise on every axis, in g.
pub const GESTURE_NOISE_SIGMA: f64 = 0.05;
const GESTURE_SECONDS: f64 = 2.0;
const GESTURE_MOTION_HZ: f64 = 1.0;
const CROSS_AXIS_LEAK: f64 = 0.1;

const KEYWORD_SECONDS: f64 = 1.0;
const UTTERANCE_SECONDS: f64 = 0.5;
const KEYWORD_SNR_DB: f64 = 20.0;
const NOISE_BAND_HZ: f64 = 6000.0;

/// Band centers (Hz) and relative amplitudes for each color word.
fn keyword_template(class: &str) -> Option<[(f64, f64); 3]> {
    match class {
        "red" => Some([(350.0, 1.0), (700.0, 0.6), (1100.0, 0.4)]),
        "green" => Some([(1400.0, 1.0), (1800.0, 0.6), (2200.0, 0.4)]),
        "blue" => Some([(2600.0, 1.0), (3300.0, 0.6), (4200.0, 0.4)]),
        _ => None,
    }
}

fn class_rng(classes: &[&str], class: &str, seed: u64) -> Result<ChaCha8Rng, DatasetError> {
    let idx = classes
        .iter()
        .position(|c| *c == class)
        .ok_or_else(|| DatasetError::UnknownClass(class.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(idx as u64 + 1);
    Ok(rng)
}

fn jitter(rng: &mut impl Rng, frac: f64) -> f64 {
    1.0 + rng.random_range(-frac..=frac)
}

pub fn synth_gesture(class: &str, seed: u64, count: usize) -> Result<Vec<Recording>, DatasetError> {
    let mut rng = class_rng(&GESTURE_CLASSES, class, seed)?;
    if count == 0 {
        return Err(DatasetError::ZeroCount);
    }
    let n = (GESTURE_SECONDS * GESTURE_SAMPLE_RATE) as usize;
    let noise = Normal::new(0.0, GESTURE_NOISE_SIGMA).expect("valid sigma");
    (0..count)
        .map(|i| {
            let amp = jitter(&mut rng, 0.2);
            let phase = rng.random_range(0.0..2.0 * PI);
            let mut axes = vec![vec![0.0; n]; 3];
            for t in 0..n {
                let arg = 2.0 * PI * GESTURE_MOTION_HZ * t as f64 / GESTURE_SAMPLE_RATE + phase;
                let (s, c) = arg.sin_cos();
                let motion = match class {
                    "updown" => [CROSS_AXIS_LEAK * s, CROSS_AXIS_LEAK * c, s],
                    "leftright" => [s, CROSS_AXIS_LEAK * c, CROSS_AXIS_LEAK * s],
                    "circle" => [s, c, 0.0],
                    _ => [0.0; 3],
                };
                for (axis, m) in axes.iter_mut().zip(motion) {
                    axis[t] = amp * m + noise.sample(&mut rng);
                }
            }
            Recording::new(class, GESTURE_SAMPLE_RATE, axes, format!("synth/{class}/{seed}/{i}"))
        })
        .collect()
}

/// White Gaussian noise low-passed to 6 kHz, scaled to the requested RMS.
fn bandlimited_noise(rng: &mut impl Rng, n: usize, rms: f64) -> Vec<f64> {
    let white: Vec<f64> = (0..n)
        .map(|_| Normal::new(0.0, 1.0).expect("unit normal").sample(rng))
        .collect();
    let mut out = lowpass(&white, NOISE_BAND_HZ, 4, KEYWORD_SAMPLE_RATE).expect("valid noise band");
    let cur = (out.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if cur > 0.0 {
        out.iter_mut().for_each(|v| *v *= rms / cur);
    }
    out
}

fn utterance(rng: &mut impl Rng, template: &[(f64, f64); 3], n: usize) -> Vec<f64> {
    let sr = KEYWORD_SAMPLE_RATE;
    let len = (UTTERANCE_SECONDS * sr) as usize;
    let onset = rng.random_range(0.1 * sr..=(KEYWORD_SECONDS - UTTERANCE_SECONDS - 0.1) * sr) as usize;
    let peak = 0.5 * jitter(rng, 0.2);
    let total: f64 = template.iter().map(|(_, a)| a).sum();
    let phases: Vec<f64> = template.iter().map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let mut out = vec![0.0; n];
    for k in 0..len.min(n - onset) {
        let env = 0.5 - 0.5 * (2.0 * PI * k as f64 / (len - 1) as f64).cos();
        let t = (onset + k) as f64 / sr;
        let s: f64 = template
            .iter()
            .zip(&phases)
            .map(|((f, a), ph)| a * (2.0 * PI * f * t + ph).sin())
            .sum();
        out[onset + k] = peak * env * s / total;
    }
    out
}

pub fn synth_keyword(class: &str, seed: u64, count: usize) -> Result<Vec<Recording>, DatasetError> {
    let mut rng = class_rng(&KEYWORD_CLASSES, class, seed)?;
    if count == 0 {
        return Err(DatasetError::ZeroCount);
    }
    let n = (KEYWORD_SECONDS * KEYWORD_SAMPLE_RATE) as usize;
    (0..count)
        .map(|i| {
            let samples = match keyword_template(class) {
                Some(template) => {
                    let mut s = utterance(&mut rng, &template, n);
                    let power = s.iter().map(|v| v * v).sum::<f64>() / n as f64;
                    let noise_rms = (power / 10f64.powf(KEYWORD_SNR_DB / 10.0)).sqrt();
                    let noise = bandlimited_noise(&mut rng, n, noise_rms);
                    s.iter_mut().zip(noise).for_each(|(v, e)| *v += e);
                    s
                }
                None => {
                    let rms = rng.random_range(0.005..0.1);
                    bandlimited_noise(&mut rng, n, rms)
                }
            };
            Recording::new(class, KEYWORD_SAMPLE_RATE, vec![samples], format!("synth/{class}/{seed}/{i}"))
        })
        .collect()
}

/// One noise-free 1 s utterance of a color word, for mixing into a stream
/// whose background supplies the noise.
pub fn keyword_utterance(class: &str, seed: u64) -> Result<Recording, DatasetError> {
    let template = keyword_template(class).ok_or_else(|| DatasetError::UnknownClass(class.to_string()))?;
    let mut rng = class_rng(&KEYWORD_CLASSES, class, seed)?;
    let n = (KEYWORD_SECONDS * KEYWORD_SAMPLE_RATE) as usize;
    let samples = utterance(&mut rng, &template, n);
    Recording::new(class, KEYWORD_SAMPLE_RATE, vec![samples], format!("utterance/{class}/{seed}"))
}

/// All classes of `kind`, `count` recordings each, in class-table order.
pub fn synth_corpus(kind: DatasetKind, seed: u64, count: usize) -> Result<Vec<Recording>, DatasetError> {
    let mut out = Vec::new();
    for class in kind.classes() {
        out.extend(match kind {
            DatasetKind::Gesture => synth_gesture(class, seed, count)?,
            DatasetKind::Keyword => synth_keyword(class, seed, count)?,
        });
    }
    Ok(out)
}

/// Default per-channel background level for [`synth_stream`]: the sensor
/// noise of synthesized gestures, or the noise floor of synthesized keyword
/// recordings (20 dB below a nominal utterance).
pub fn stream_background_rms(kind: DatasetKind) -> f64 {
    match kind {
        DatasetKind::Gesture => GESTURE_NOISE_SIGMA,
        DatasetKind::Keyword => 0.01,
    }
}

/// A continuous stream of background activity (`idle` motion or `noise`
/// audio) at `background_rms` per channel, with optional recordings mixed
/// in at given sample offsets.
pub fn synth_stream(
    kind: DatasetKind,
    seed: u64,
    seconds: f64,
    background_rms: f64,
    inserts: &[(usize, &Recording)],
) -> Result<Recording, DatasetError> {
    if !(background_rms >= 0.0 && background_rms.is_finite()) {
        return Err(DatasetError::InvalidRecording(format!(
            "background rms {background_rms} must be finite and non-negative"
        )));
    }
    let sr = kind.sample_rate();
    let n = (seconds * sr).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut channels = match kind {
        DatasetKind::Gesture => {
            let noise = Normal::new(0.0, background_rms).expect("valid sigma");
            let mut axes = vec![vec![0.0; n]; 3];
            for v in axes.iter_mut().flatten() {
                *v = noise.sample(&mut rng);
            }
            axes
        }
        DatasetKind::Keyword => vec![bandlimited_noise(&mut rng, n, background_rms)],
    };
    for &(offset, rec) in inserts {
        if rec.channels() != channels.len() {
            return Err(DatasetError::InvalidRecording(format!(
                "insert has {} channels, stream has {}",
                rec.channels(),
                channels.len()
            )));
        }
        for (dst, src) in channels.iter_mut().zip(&rec.samples) {
            for (t, v) in src.iter().enumerate() {
                if let Some(d) = dst.get_mut(offset + t) {
                    *d += v;
                }
            }
        }
    }
    Recording::new(kind.idle_label(), sr, channels, format!("stream/{kind}/{seed}"))
}

/// A pure sine at full scale `amplitude`, mono.
pub fn sine_tone(freq: f64, amplitude: f64, seconds: f64, sample_rate: f64) -> Recording {
    let n = (seconds * sample_rate).round() as usize;
    let samples = (0..n)
        .map(|t| amplitude * (2.0 * PI * freq * t as f64 / sample_rate).sin())
        .collect();
    Recording::new("tone", sample_rate, vec![samples], format!("tone/{freq}"))
        .expect("finite tone")
}
