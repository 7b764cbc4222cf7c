//! Offline TinyML workflow for gesture and keyword recognition.
//!
//! The crate follows the usual embedded-ML pipeline: labeled recordings are
//! windowed and split ([`dataset`]), turned into fixed-length feature vectors
//! ([`dsp`]), classified by a small dense network ([`model`]), quantized to
//! int8 under a microcontroller memory budget ([`quant`]) and finally packed
//! into a deployable blob that drives a fixed-memory streaming classifier
//! ([`runtime`]). [`pipeline`] wires the stages together the way the CLI runs
//! them.

pub mod dataset;
pub mod dsp;
pub mod error;
pub mod model;
pub mod pipeline;
pub mod project;
pub mod quant;
pub mod runtime;

pub use dataset::{Dataset, DatasetKind, LabeledWindow, Recording, SplitSpec};
pub use dsp::{DspConfig, FeatureMatrix, FeatureVector, MfccConfig, NormStats, SpectralConfig};
pub use error::{Error, Result};
pub use model::{EvalReport, ModelParams, Topology, TrainConfig};
pub use project::ProjectConfig;
pub use quant::{BudgetReport, QuantParams, QuantizedModel};
pub use runtime::{Action, ActionEvent, RuntimeConfig, StreamClassifier};
