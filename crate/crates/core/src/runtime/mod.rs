//! Deployment: the model blob, the streaming classifier and the
//! label-to-action table.

mod action;
pub mod blob;
mod stream;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action::{action_map, Action};
pub use blob::{export_blob, load_blob, BlobError, Deployment};
pub use stream::{ActionEvent, StreamClassifier, WindowReport};

use crate::dsp::DspError;
use crate::quant::QuantError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuntimeConfig {
    /// Smoothed top-class probability needed to fire an event.
    pub min_confidence: f32,
    /// Number of window predictions averaged (K).
    pub smoothing: u8,
    /// Minimum number of windows between two events.
    pub cooldown: u8,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            min_confidence: 0.6,
            smoothing: 4,
            cooldown: 2,
        }
    }
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("chunk has {found} channels, model expects {expected}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("channels in chunk differ in length")]
    RaggedChunk,
    #[error("chunk of {len} samples exceeds one window ({window})")]
    ChunkTooLarge { len: usize, window: usize },
    #[error("model expects {model} features, dsp produces {dsp}")]
    FeatureMismatch { model: usize, dsp: usize },
    #[error("smoothing window must be at least 1")]
    ZeroSmoothing,
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Quant(#[from] QuantError),
}
