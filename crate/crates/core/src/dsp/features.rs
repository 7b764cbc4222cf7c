use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DspConfig, DspError};
use crate::dataset::Dataset;

/// Rows of features in dataset order, with label indices into `label_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub label_names: Vec<String>,
    pub layout_id: String,
}

impl FeatureMatrix {
    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// One row per window, label name in the last column.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (row, &label) in self.rows.iter().zip(&self.labels) {
            for v in row {
                write!(out, "{v},")?;
            }
            writeln!(out, "{}", self.label_names[label])?;
        }
        Ok(())
    }

    /// `key = value` sidecar describing the CSV columns.
    pub fn layout_text(&self) -> String {
        format!(
            "layout_id = {:?}\nwidth = {}\nrows = {}\nlabels = {:?}\n",
            self.layout_id,
            self.width(),
            self.len(),
            self.label_names
        )
    }
}

/// Per-column z-score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Population mean/std per column; zero-variance columns get std 1 so
    /// normalization leaves them centered instead of dividing by zero.
    pub fn compute(rows: &[Vec<f64>]) -> Self {
        let width = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; width];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        NormStats { mean, std }
    }

    pub fn identity(width: usize) -> Self {
        NormStats {
            mean: vec![0.0; width],
            std: vec![1.0; width],
        }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Extracts features for every window (in parallel, order preserved) and the
/// normalization statistics of the result.
pub fn featurize(ds: &Dataset, cfg: &DspConfig) -> Result<(FeatureMatrix, NormStats), DspError> {
    if ds.kind != cfg.kind() {
        return Err(DspError::InvalidConfig(format!(
            "{} dataset cannot use {} features",
            ds.kind,
            cfg.layout_id()
        )));
    }
    if ds.windows.is_empty() {
        return Err(DspError::NoWindows);
    }
    let extractor = cfg.extractor()?;
    let rows = ds
        .windows
        .par_iter()
        .map(|w| extractor.extract(w).map(|f| f.values))
        .collect::<Result<Vec<_>, _>>()?;
    let labels = ds
        .windows
        .iter()
        .map(|w| ds.label_index(&w.label).expect("dataset invariant: label in table"))
        .collect();
    let stats = NormStats::compute(&rows);
    Ok((
        FeatureMatrix {
            rows,
            labels,
            label_names: ds.labels.clone(),
            layout_id: cfg.layout_id(),
        },
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth, DatasetKind};

    fn gesture_ds() -> Dataset {
        let recs = synth::synth_corpus(DatasetKind::Gesture, 3, 3).unwrap();
        Dataset::from_recordings(DatasetKind::Gesture, &recs, 200, 50).unwrap()
    }

    #[test]
    fn shape_and_order() {
        let ds = gesture_ds();
        let cfg = DspConfig::default_for(DatasetKind::Gesture);
        let (m, stats) = featurize(&ds, &cfg).unwrap();
        assert_eq!(m.len(), ds.len());
        assert!(m.rows.iter().all(|r| r.len() == 51));
        assert_eq!(stats.mean.len(), 51);
        let ex = cfg.extractor().unwrap();
        assert_eq!(m.rows[5], ex.extract(&ds.windows[5]).unwrap().values);
        assert_eq!(m.label_names[m.labels[5]], ds.windows[5].label);
    }

    #[test]
    fn empty_and_mismatched() {
        let ds = Dataset::new(DatasetKind::Gesture, vec!["a".into()], vec![]).unwrap();
        let cfg = DspConfig::default_for(DatasetKind::Gesture);
        assert!(matches!(featurize(&ds, &cfg), Err(DspError::NoWindows)));
        let ds = gesture_ds();
        assert!(featurize(&ds, &DspConfig::default_for(DatasetKind::Keyword)).is_err());
    }

    #[test]
    fn normalization_zero_mean_unit_std() {
        let (m, stats) = featurize(&gesture_ds(), &DspConfig::default_for(DatasetKind::Gesture)).unwrap();
        let normed: Vec<Vec<f64>> = m.rows.iter().map(|r| stats.apply(r)).collect();
        let n = normed.len() as f64;
        for j in 0..m.width() {
            let col: Vec<f64> = normed.iter().map(|r| r[j]).collect();
            let mean = col.iter().sum::<f64>() / n;
            assert!(mean.abs() < 1e-9, "col {j} mean {mean}");
            let raw_var = m.rows.iter().map(|r| (r[j] - stats.mean[j]).powi(2)).sum::<f64>();
            if raw_var > 0.0 {
                let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                assert!((sd - 1.0).abs() < 1e-6, "col {j} std {sd}");
            }
        }
    }

    #[test]
    fn csv_has_label_last() {
        let (m, _) = featurize(&gesture_ds(), &DspConfig::default_for(DatasetKind::Gesture)).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first.split(',').count(), 52);
        assert_eq!(first.rsplit(',').next().unwrap(), m.label_names[m.labels[0]]);
    }
}
