//! The stages of a project, in the order the CLI runs them.

use serde::{Deserialize, Serialize};

use crate::dataset::{self, Dataset};
use crate::dsp::{featurize, DspConfig, FeatureMatrix, NormStats};
use crate::error::{Error, Result};
use crate::model::{self, argmax, EvalReport, History, ModelError, ModelParams};
use crate::project::ProjectConfig;
use crate::quant::{budget_report, calibrate, quantize, BudgetReport, QuantError, QuantizedModel};
use crate::runtime::blob;

/// Minimum test accuracy a trained model must reach.
pub const ACCURACY_BAR: f64 = 0.90;
/// Largest tolerated accuracy loss from quantization, as a fraction.
pub const MAX_ACCURACY_DROP: f64 = 0.02;

/// Loads and windows the project's dataset.
pub fn load_dataset(cfg: &ProjectConfig) -> Result<Dataset> {
    let kind = cfg.kind;
    let recordings = dataset::load_dataset_dir(&cfg.dataset)?;
    for r in &recordings {
        if r.sample_rate != kind.sample_rate() {
            return Err(Error::KindMismatch(format!(
                "{}: {} Hz, {kind} expects {} Hz",
                r.source_id,
                r.sample_rate,
                kind.sample_rate()
            )));
        }
        if r.channels() != kind.channels() {
            return Err(Error::KindMismatch(format!(
                "{}: {} channels, {kind} expects {}",
                r.source_id,
                r.channels(),
                kind.channels()
            )));
        }
    }
    Ok(Dataset::from_recordings(kind, &recordings, kind.window_len(), kind.stride())?)
}

pub fn split_dataset(cfg: &ProjectConfig, ds: &Dataset) -> Result<(Dataset, Dataset)> {
    Ok(dataset::split(ds, &cfg.split)?)
}

/// Train and test features; normalization comes from the train half only.
#[derive(Debug, Clone)]
pub struct Features {
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    pub stats: NormStats,
}

pub fn extract_features(cfg: &ProjectConfig, ds: &Dataset) -> Result<Features> {
    let (train, test) = split_dataset(cfg, ds)?;
    let (train, stats) = featurize(&train, &cfg.dsp)?;
    let (test, _) = featurize(&test, &cfg.dsp)?;
    Ok(Features { train, test, stats })
}

pub fn train_model(cfg: &ProjectConfig, features: &Features) -> Result<(ModelParams, History)> {
    Ok(model::train(
        &features.train,
        &features.stats,
        &cfg.model.hidden,
        &cfg.train,
    )?)
}

/// Fails unless `params` was trained on features from `dsp`.
pub fn check_layout(params: &ModelParams, dsp: &DspConfig) -> Result<()> {
    if params.layout_id != dsp.layout_id() {
        return Err(Error::KindMismatch(format!(
            "model expects features {:?}, project produces {:?}",
            params.layout_id,
            dsp.layout_id()
        )));
    }
    Ok(())
}

pub fn evaluate_model(cfg: &ProjectConfig, params: &ModelParams, test: &FeatureMatrix) -> Result<EvalReport> {
    check_layout(params, &cfg.dsp)?;
    Ok(model::evaluate(params, test, f64::from(cfg.runtime.min_confidence))?)
}

fn quant_to_model(e: QuantError) -> ModelError {
    match e {
        QuantError::Model(m) => m,
        other => ModelError::InvalidConfig(other.to_string()),
    }
}

pub fn evaluate_quantized(qm: &QuantizedModel, test: &FeatureMatrix, min_confidence: f64) -> Result<EvalReport> {
    Ok(model::evaluate_with(&qm.labels, &test.rows, &test.labels, min_confidence, |row| {
        qm.forward(row).map_err(quant_to_model)
    })?)
}

/// Fraction of rows on which both models pick the same class.
pub fn argmax_agreement(params: &ModelParams, qm: &QuantizedModel, rows: &[Vec<f64>]) -> Result<f64> {
    if rows.is_empty() {
        return Err(ModelError::Empty("comparison set").into());
    }
    let mut same = 0;
    for r in rows {
        if argmax(&params.forward(r)?) == argmax(&qm.forward(r)?) {
            same += 1;
        }
    }
    Ok(same as f64 / rows.len() as f64)
}

/// Float vs int8 comparison on the test set, plus the memory budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantSummary {
    pub float_accuracy: f64,
    pub quantized_accuracy: f64,
    pub accuracy_drop: f64,
    pub argmax_agreement: f64,
    pub budget: BudgetReport,
}

impl QuantSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn within_drop(&self) -> bool {
        self.accuracy_drop <= MAX_ACCURACY_DROP + 1e-12
    }
}

/// Calibrates on the training features and quantizes.
pub fn quantize_model(params: &ModelParams, features: &Features) -> Result<QuantizedModel> {
    let ranges = calibrate(params, &features.train.rows)?;
    Ok(quantize(params, &ranges)?)
}

pub fn summarize_quantization(
    cfg: &ProjectConfig,
    params: &ModelParams,
    qm: &QuantizedModel,
    test: &FeatureMatrix,
) -> Result<QuantSummary> {
    let min_conf = f64::from(cfg.runtime.min_confidence);
    let float = evaluate_model(cfg, params, test)?;
    let quant = evaluate_quantized(qm, test, min_conf)?;
    Ok(QuantSummary {
        float_accuracy: float.accuracy,
        quantized_accuracy: quant.accuracy,
        accuracy_drop: float.accuracy - quant.accuracy,
        argmax_agreement: argmax_agreement(params, qm, &test.rows)?,
        budget: budget_report(qm, &cfg.dsp, &cfg.runtime),
    })
}

pub fn encode_blob(cfg: &ProjectConfig, qm: &QuantizedModel) -> Result<Vec<u8>> {
    Ok(blob::encode(qm, &cfg.dsp, &cfg.runtime)?)
}

/// Everything one end-to-end run produces.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub features: Features,
    pub params: ModelParams,
    pub history: History,
    pub report: EvalReport,
    pub quantized: QuantizedModel,
    pub quant_summary: QuantSummary,
    pub blob: Vec<u8>,
}

pub fn run_all(cfg: &ProjectConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let features = extract_features(cfg, &ds)?;
    let (params, history) = train_model(cfg, &features)?;
    let report = evaluate_model(cfg, &params, &features.test)?;
    let quantized = quantize_model(&params, &features)?;
    let quant_summary = summarize_quantization(cfg, &params, &quantized, &features.test)?;
    let blob = encode_blob(cfg, &quantized)?;
    Ok(PipelineRun {
        features,
        params,
        history,
        report,
        quantized,
        quant_summary,
        blob,
    })
}
