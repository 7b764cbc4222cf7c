use std::fmt;

use super::{action_map, Action, Deployment, RuntimeConfig, StreamError};
use crate::dsp::Extractor;
use crate::model::argmax;
use crate::quant::QuantizedModel;

#[derive(Debug, Clone, PartialEq)]
pub struct ActionEvent {
    /// Samples consumed when the triggering window closed.
    pub timestamp: u64,
    pub label: String,
    pub confidence: f64,
    pub action: Action,
}

impl fmt::Display for ActionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{:.4}\t{}",
            self.timestamp, self.label, self.confidence, self.action
        )
    }
}

/// Per-window view handed to [`StreamClassifier::push_samples_with`].
#[derive(Debug, Clone, Copy)]
pub struct WindowReport<'a> {
    pub timestamp: u64,
    pub labels: &'a [String],
    pub probabilities: &'a [f64],
    pub smoothed: &'a [f64],
}

impl fmt::Display for WindowReport<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "# {}", self.timestamp)?;
        for (l, p) in self.labels.iter().zip(self.smoothed) {
            write!(f, "\t{l}={p:.4}")?;
        }
        Ok(())
    }
}

/// Sliding-window classifier over one continuous stream.
///
/// Every buffer is allocated in [`StreamClassifier::new`]; pushing samples
/// never grows them. An event fires when the smoothed top class is not the
/// idle class, reaches `min_confidence`, was not already the active class
/// on the previous window, and at least `cooldown` windows have passed since
/// the last event.
pub struct StreamClassifier {
    model: QuantizedModel,
    extractor: Extractor,
    config: RuntimeConfig,
    channels: usize,
    window_len: usize,
    stride: usize,
    idle: Option<usize>,
    actions: Vec<Action>,
    ring: Vec<Vec<f64>>,
    pos: usize,
    total: u64,
    window: Vec<f64>,
    history: Vec<Vec<f64>>,
    slot: usize,
    probs: Vec<f64>,
    smoothed: Vec<f64>,
    windows_seen: u64,
    last_event: Option<u64>,
    active: Option<usize>,
}

impl StreamClassifier {
    pub fn new(deployment: Deployment) -> Result<Self, StreamError> {
        let rt = deployment.runtime;
        Self::with_config(deployment, rt)
    }

    /// Uses `config` in place of the settings stored with the model.
    pub fn with_config(deployment: Deployment, config: RuntimeConfig) -> Result<Self, StreamError> {
        let Deployment { model, dsp, .. } = deployment;
        if config.smoothing == 0 {
            return Err(StreamError::ZeroSmoothing);
        }
        if dsp.feature_len() != model.input_dim() {
            return Err(StreamError::FeatureMismatch {
                model: model.input_dim(),
                dsp: dsp.feature_len(),
            });
        }
        let kind = dsp.kind();
        let extractor = dsp.extractor()?;
        let (channels, window_len) = (kind.channels(), kind.window_len());
        let classes = model.labels.len();
        let k = usize::from(config.smoothing);
        Ok(StreamClassifier {
            idle: model.labels.iter().position(|l| l == kind.idle_label()),
            actions: model.labels.iter().map(|l| action_map(l)).collect(),
            extractor,
            config,
            channels,
            window_len,
            stride: kind.stride(),
            ring: vec![vec![0.0; window_len]; channels],
            pos: 0,
            total: 0,
            window: vec![0.0; channels * window_len],
            history: vec![vec![1.0 / classes as f64; classes]; k],
            slot: 0,
            probs: vec![0.0; classes],
            smoothed: vec![1.0 / classes as f64; classes],
            windows_seen: 0,
            last_event: None,
            active: None,
            model,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.model.labels
    }

    pub fn config(&self) -> RuntimeConfig {
        self.config
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn samples_seen(&self) -> u64 {
        self.total
    }

    pub fn smoothed(&self) -> &[f64] {
        &self.smoothed
    }

    /// Capacities of every internal buffer, for checking that streaming
    /// allocates nothing.
    pub fn capacities(&self) -> Vec<usize> {
        let mut caps = vec![self.ring.capacity(), self.window.capacity(), self.history.capacity()];
        caps.extend(self.ring.iter().map(Vec::capacity));
        caps.extend(self.history.iter().map(Vec::capacity));
        caps.extend([self.probs.capacity(), self.smoothed.capacity(), self.actions.capacity()]);
        caps
    }

    pub fn push_samples<C: AsRef<[f64]>>(&mut self, chunk: &[C]) -> Result<Vec<ActionEvent>, StreamError> {
        self.push_samples_with(chunk, |_| {})
    }

    /// Like [`push_samples`](Self::push_samples), calling `on_window` after
    /// every classified window.
    pub fn push_samples_with<C, F>(&mut self, chunk: &[C], mut on_window: F) -> Result<Vec<ActionEvent>, StreamError>
    where
        C: AsRef<[f64]>,
        F: FnMut(&WindowReport<'_>),
    {
        if chunk.len() != self.channels {
            return Err(StreamError::ChannelMismatch {
                expected: self.channels,
                found: chunk.len(),
            });
        }
        let len = chunk[0].as_ref().len();
        if chunk.iter().any(|c| c.as_ref().len() != len) {
            return Err(StreamError::RaggedChunk);
        }
        if len > self.window_len {
            return Err(StreamError::ChunkTooLarge {
                len,
                window: self.window_len,
            });
        }
        let mut events = Vec::new();
        for i in 0..len {
            for (ring, ch) in self.ring.iter_mut().zip(chunk) {
                ring[self.pos] = ch.as_ref()[i];
            }
            self.pos = (self.pos + 1) % self.window_len;
            self.total += 1;
            let wl = self.window_len as u64;
            if self.total >= wl && (self.total - wl) % self.stride as u64 == 0 {
                if let Some(ev) = self.classify()? {
                    events.push(ev);
                }
                on_window(&WindowReport {
                    timestamp: self.total,
                    labels: &self.model.labels,
                    probabilities: &self.probs,
                    smoothed: &self.smoothed,
                });
            }
        }
        Ok(events)
    }

    fn classify(&mut self) -> Result<Option<ActionEvent>, StreamError> {
        let wl = self.window_len;
        for (c, ring) in self.ring.iter().enumerate() {
            let dst = &mut self.window[c * wl..(c + 1) * wl];
            let (head, tail) = ring.split_at(self.pos);
            dst[..tail.len()].copy_from_slice(tail);
            dst[tail.len()..].copy_from_slice(head);
        }
        let features = self.extractor.extract_raw(&self.window, self.channels)?;
        let probs = self.model.forward(&features)?;
        self.probs.copy_from_slice(&probs);
        self.history[self.slot].copy_from_slice(&probs);
        self.slot = (self.slot + 1) % self.history.len();
        let k = self.history.len() as f64;
        for (j, s) in self.smoothed.iter_mut().enumerate() {
            *s = self.history.iter().map(|h| h[j]).sum::<f64>() / k;
        }

        let window = self.windows_seen;
        self.windows_seen += 1;
        let top = argmax(&self.smoothed);
        let confidence = self.smoothed[top];
        let qualifies = Some(top) != self.idle && confidence >= f64::from(self.config.min_confidence);
        if !qualifies {
            self.active = None;
            return Ok(None);
        }
        let cooled = self
            .last_event
            .is_none_or(|last| window - last >= u64::from(self.config.cooldown));
        if self.active == Some(top) || !cooled {
            return Ok(None);
        }
        self.active = Some(top);
        self.last_event = Some(window);
        Ok(Some(ActionEvent {
            timestamp: self.total,
            label: self.model.labels[top].clone(),
            confidence,
            action: self.actions[top],
        }))
    }
}
