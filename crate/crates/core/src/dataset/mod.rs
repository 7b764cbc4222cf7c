//! Labeled recordings, fixed-size windows and train/test splitting.

mod io;
mod split;
pub mod synth;
mod window;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{
    load_csv_recording, load_dataset_dir, load_recording, load_wav_recording, write_csv_recording,
    write_dataset_dir, write_recording, write_wav_recording,
};
pub use split::{split, SplitSpec};
pub use window::window;

/// IMU sample rate for gesture recordings, in Hz.
pub const GESTURE_SAMPLE_RATE: f64 = 100.0;
/// Gesture window: 2 s at 100 Hz.
pub const GESTURE_WINDOW_LEN: usize = 200;
/// Gesture hop: 0.5 s at 100 Hz.
pub const GESTURE_STRIDE: usize = 50;
/// Audio sample rate for keyword recordings, in Hz.
pub const KEYWORD_SAMPLE_RATE: f64 = 16_000.0;
/// Keyword window: 1 s at 16 kHz.
pub const KEYWORD_WINDOW_LEN: usize = 16_000;
/// Keyword hop while streaming: 0.25 s.
pub const KEYWORD_STRIDE: usize = 4_000;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("empty recording")]
    EmptyRecording,
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: non-finite value")]
    NonFinite { row: usize },
    #[error("mono required (file has {0} channels)")]
    NotMono(u16),
    #[error("16-bit samples required (file has {0} bits)")]
    Not16Bit(u16),
    #[error("unsupported (compressed or non-PCM) wav format")]
    Compressed,
    #[error("truncated header")]
    TruncatedHeader,
    #[error("invalid recording: {0}")]
    InvalidRecording(String),
    #[error("label {label:?} has {count} windows, at least 2 required")]
    TooFewWindows { label: String, count: usize },
    #[error("train fraction {0} outside (0, 1)")]
    BadFraction(f64),
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Gesture,
    Keyword,
}

impl DatasetKind {
    pub fn channels(self) -> usize {
        match self {
            DatasetKind::Gesture => 3,
            DatasetKind::Keyword => 1,
        }
    }

    pub fn sample_rate(self) -> f64 {
        match self {
            DatasetKind::Gesture => GESTURE_SAMPLE_RATE,
            DatasetKind::Keyword => KEYWORD_SAMPLE_RATE,
        }
    }

    pub fn window_len(self) -> usize {
        match self {
            DatasetKind::Gesture => GESTURE_WINDOW_LEN,
            DatasetKind::Keyword => KEYWORD_WINDOW_LEN,
        }
    }

    /// Hop used both for dataset windowing and for streaming inference.
    pub fn stride(self) -> usize {
        match self {
            DatasetKind::Gesture => GESTURE_STRIDE,
            DatasetKind::Keyword => KEYWORD_STRIDE,
        }
    }

    /// The class that means "nothing is happening"; never actionable.
    pub fn idle_label(self) -> &'static str {
        match self {
            DatasetKind::Gesture => "idle",
            DatasetKind::Keyword => "noise",
        }
    }

    pub fn classes(self) -> &'static [&'static str] {
        match self {
            DatasetKind::Gesture => &synth::GESTURE_CLASSES,
            DatasetKind::Keyword => &synth::KEYWORD_CLASSES,
        }
    }

    pub fn file_extension(self) -> &'static str {
        match self {
            DatasetKind::Gesture => "csv",
            DatasetKind::Keyword => "wav",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Gesture => "gesture",
            DatasetKind::Keyword => "keyword",
        })
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gesture" => Ok(DatasetKind::Gesture),
            "keyword" => Ok(DatasetKind::Keyword),
            other => Err(DatasetError::InvalidDataset(format!("unknown kind {other:?}"))),
        }
    }
}

/// A labeled multi-channel time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub label: String,
    pub sample_rate: f64,
    /// Channel-major: `samples[c][t]`.
    pub samples: Vec<Vec<f64>>,
    pub source_id: String,
}

impl Recording {
    pub fn new(
        label: impl Into<String>,
        sample_rate: f64,
        samples: Vec<Vec<f64>>,
        source_id: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        let rec = Recording {
            label: label.into(),
            sample_rate,
            samples,
            source_id: source_id.into(),
        };
        rec.validate()?;
        Ok(rec)
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let bad = |msg: &str| Err(DatasetError::InvalidRecording(msg.to_string()));
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return bad("sample rate must be positive");
        }
        if !matches!(self.samples.len(), 1 | 3) {
            return bad("channel count must be 1 or 3");
        }
        let len = self.samples[0].len();
        if self.samples.iter().any(|c| c.len() != len) {
            return bad("channels differ in length");
        }
        if self.samples.iter().flatten().any(|v| !v.is_finite()) {
            return bad("non-finite sample");
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Where a window came from; doubles as its identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Origin {
    pub source_id: String,
    pub start: usize,
}

/// A fixed-length slice of a recording, flattened channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub label: String,
    pub channels: usize,
    pub data: Vec<f64>,
    pub origin: Origin,
}

impl LabeledWindow {
    pub fn window_len(&self) -> usize {
        self.data.len() / self.channels.max(1)
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.window_len();
        &self.data[c * n..(c + 1) * n]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub labels: Vec<String>,
    pub windows: Vec<LabeledWindow>,
}

impl Dataset {
    pub fn new(
        kind: DatasetKind,
        labels: Vec<String>,
        windows: Vec<LabeledWindow>,
    ) -> Result<Self, DatasetError> {
        if labels.is_empty() {
            return Err(DatasetError::InvalidDataset("no labels".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(DatasetError::InvalidDataset(format!("duplicate label {l:?}")));
            }
        }
        if let Some(w) = windows.iter().find(|w| !labels.contains(&w.label)) {
            return Err(DatasetError::InvalidDataset(format!(
                "window label {:?} not in label table",
                w.label
            )));
        }
        Ok(Dataset {
            kind,
            labels,
            windows,
        })
    }

    /// Windows every recording and collects the labels in sorted order.
    pub fn from_recordings(
        kind: DatasetKind,
        recordings: &[Recording],
        window_len: usize,
        stride: usize,
    ) -> Result<Self, DatasetError> {
        let mut labels: Vec<String> = recordings.iter().map(|r| r.label.clone()).collect();
        labels.sort();
        labels.dedup();
        let mut windows = Vec::new();
        for rec in recordings {
            if rec.channels() != kind.channels() {
                return Err(DatasetError::InvalidDataset(format!(
                    "{}: {} channels, {kind} expects {}",
                    rec.source_id,
                    rec.channels(),
                    kind.channels()
                )));
            }
            windows.extend(window(rec, window_len, stride));
        }
        Dataset::new(kind, labels, windows)
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn count_per_label(&self) -> Vec<usize> {
        let mut counts = vec![0; self.labels.len()];
        for w in &self.windows {
            if let Some(i) = self.label_index(&w.label) {
                counts[i] += 1;
            }
        }
        counts
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recording_invariants() {
        assert!(Recording::new("a", 0.0, vec![vec![0.0]], "s").is_err());
        assert!(Recording::new("a", 10.0, vec![vec![0.0]; 2], "s").is_err());
        assert!(Recording::new("a", 10.0, vec![vec![0.0], vec![0.0, 1.0], vec![0.0]], "s").is_err());
        assert!(Recording::new("a", 10.0, vec![vec![f64::NAN]], "s").is_err());
        assert!(Recording::new("a", 10.0, vec![vec![0.0, 1.0]], "s").is_ok());
    }

    #[test]
    fn dataset_rejects_duplicate_and_unknown_labels() {
        let w = LabeledWindow {
            label: "x".into(),
            channels: 1,
            data: vec![0.0],
            origin: Origin {
                source_id: "s".into(),
                start: 0,
            },
        };
        assert!(Dataset::new(DatasetKind::Keyword, vec![], vec![]).is_err());
        assert!(Dataset::new(DatasetKind::Keyword, vec!["a".into(), "a".into()], vec![]).is_err());
        assert!(Dataset::new(DatasetKind::Keyword, vec!["a".into()], vec![w.clone()]).is_err());
        assert!(Dataset::new(DatasetKind::Keyword, vec!["x".into()], vec![w]).is_ok());
    }
}
