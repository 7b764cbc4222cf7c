//! The project file: one TOML document that drives every pipeline stage.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetKind, SplitSpec};
use crate::dsp::DspConfig;
use crate::error::{Error, Result};
use crate::model::TrainConfig;
use crate::runtime::RuntimeConfig;

pub const DEFAULT_HIDDEN: [usize; 2] = [20, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub hidden: Vec<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            hidden: DEFAULT_HIDDEN.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectConfig {
    pub kind: DatasetKind,
    /// Dataset root, `<root>/<label>/<file>`.
    pub dataset: PathBuf,
    /// Where models, reports and blobs are written.
    pub artifacts: PathBuf,
    pub split: SplitSpec,
    pub dsp: DspConfig,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub runtime: RuntimeConfig,
}

/// On-disk shape: everything but `kind` and `dataset` may be omitted.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: DatasetKind,
    dataset: PathBuf,
    artifacts: Option<PathBuf>,
    #[serde(default)]
    split: SplitSpec,
    dsp: Option<DspConfig>,
    #[serde(default)]
    model: ModelSection,
    #[serde(default)]
    train: TrainConfig,
    #[serde(default)]
    runtime: RuntimeConfig,
}

impl ProjectConfig {
    pub fn new(kind: DatasetKind, dataset: impl Into<PathBuf>) -> Self {
        ProjectConfig {
            kind,
            dataset: dataset.into(),
            artifacts: PathBuf::from("build"),
            split: SplitSpec::default(),
            dsp: DspConfig::default_for(kind),
            model: ModelSection::default(),
            train: TrainConfig::default(),
            runtime: RuntimeConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = ProjectConfig {
            kind: raw.kind,
            dataset: raw.dataset,
            artifacts: raw.artifacts.unwrap_or_else(|| PathBuf::from("build")),
            split: raw.split,
            dsp: raw.dsp.unwrap_or_else(|| DspConfig::default_for(raw.kind)),
            model: raw.model,
            train: raw.train,
            runtime: raw.runtime,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads a project file; relative paths inside it are taken relative
    /// to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.dataset = base.join(&cfg.dataset);
        cfg.artifacts = base.join(&cfg.artifacts);
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dsp.kind() != self.kind {
            return Err(Error::KindMismatch(format!(
                "{} project with {} features",
                self.kind,
                self.dsp.layout_id()
            )));
        }
        self.split.validate()?;
        self.dsp.validate()?;
        self.train.validate()?;
        if self.model.hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be >= 1".into()));
        }
        let rt = &self.runtime;
        if !(rt.min_confidence >= 0.0 && rt.min_confidence <= 1.0) {
            return Err(Error::Config("runtime.min_confidence must lie in [0, 1]".into()));
        }
        if rt.smoothing == 0 {
            return Err(Error::Config("runtime.smoothing must be >= 1".into()));
        }
        Ok(())
    }

    /// Reseeds both the split and training.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.split.seed = seed;
        self.train.seed = seed;
        self
    }

    pub fn artifacts(&self) -> Artifacts {
        Artifacts {
            dir: self.artifacts.clone(),
        }
    }
}

/// Fixed file names inside the artifacts directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn create(&self) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))
    }

    pub fn split(&self) -> PathBuf {
        self.dir.join("split.json")
    }
    pub fn train_features(&self) -> PathBuf {
        self.dir.join("features_train.csv")
    }
    pub fn test_features(&self) -> PathBuf {
        self.dir.join("features_test.csv")
    }
    pub fn features_layout(&self) -> PathBuf {
        self.dir.join("features.layout")
    }
    pub fn model(&self) -> PathBuf {
        self.dir.join("model.json")
    }
    pub fn history(&self) -> PathBuf {
        self.dir.join("history.csv")
    }
    pub fn report_text(&self) -> PathBuf {
        self.dir.join("report.txt")
    }
    pub fn report_json(&self) -> PathBuf {
        self.dir.join("report.json")
    }
    pub fn blob(&self) -> PathBuf {
        self.dir.join("model.tnym")
    }
    pub fn quant_report(&self) -> PathBuf {
        self.dir.join("quant.json")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        for kind in [DatasetKind::Gesture, DatasetKind::Keyword] {
            let cfg = ProjectConfig::new(kind, "data");
            let back = ProjectConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = ProjectConfig::from_toml("kind = \"keyword\"\ndataset = \"d\"\n").unwrap();
        assert_eq!(cfg, ProjectConfig::new(DatasetKind::Keyword, "d"));
        assert_eq!(cfg.runtime.min_confidence, 0.6);
    }

    #[test]
    fn overrides_and_errors() {
        let cfg = ProjectConfig::from_toml(
            "kind = \"gesture\"\ndataset = \"d\"\n[train]\nepochs = 5\n[dsp]\nblock = \"spectral\"\npower_bins = 8\n",
        )
        .unwrap();
        assert_eq!(cfg.train.epochs, 5);
        assert_eq!(cfg.train.batch_size, 16);
        assert_eq!(cfg.dsp.feature_len(), 27);
        assert!(matches!(
            ProjectConfig::from_toml("kind = \"gesture\"\ndataset = \"d\"\n[dsp]\nblock = \"mfcc\"\n"),
            Err(Error::KindMismatch(_))
        ));
        assert!(ProjectConfig::from_toml("kind = \"gesture\"\ndataset = \"d\"\nbogus = 1\n").is_err());
        assert!(ProjectConfig::from_toml("kind = \"gesture\"\n").is_err());
    }

    #[test]
    fn paths_resolve_against_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("project.toml");
        ProjectConfig::new(DatasetKind::Gesture, "data").save(&path).unwrap();
        let cfg = ProjectConfig::load(&path).unwrap();
        assert_eq!(cfg.dataset, dir.path().join("data"));
        assert_eq!(cfg.artifacts().blob(), dir.path().join("build/model.tnym"));
    }
}
