use std::fmt;

use serde::{Deserialize, Serialize};

use super::{argmax, ModelError, ModelParams};
use crate::dsp::FeatureMatrix;

/// Thresholded classification results on a labeled feature set.
///
/// A prediction whose top probability is below `min_confidence` is
/// "uncertain": it is counted in `rejected`, left out of the confusion
/// matrix, and counted as an error for accuracy and recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub labels: Vec<String>,
    pub min_confidence: f64,
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub rejected: usize,
    pub rejected_per_class: Vec<usize>,
    /// `confusion[true][predicted]` over accepted predictions.
    pub confusion: Vec<Vec<usize>>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn class_totals(&self) -> Vec<usize> {
        self.confusion
            .iter()
            .zip(&self.rejected_per_class)
            .map(|(row, r)| row.iter().sum::<usize>() + r)
            .collect()
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.labels.iter().map(String::len).max().unwrap_or(5).max(9);
        writeln!(
            f,
            "accuracy {:.4} ({}/{}) at min_confidence {:.2}, {} uncertain",
            self.accuracy, self.correct, self.total, self.min_confidence, self.rejected
        )?;
        write!(f, "{:>w$}", "true\\pred")?;
        for l in &self.labels {
            write!(f, " {l:>w$}")?;
        }
        writeln!(f, " {:>w$} {:>9} {:>9}", "uncertain", "precision", "recall")?;
        for (i, l) in self.labels.iter().enumerate() {
            write!(f, "{l:>w$}")?;
            for c in &self.confusion[i] {
                write!(f, " {c:>w$}")?;
            }
            writeln!(
                f,
                " {:>w$} {:>9.4} {:>9.4}",
                self.rejected_per_class[i], self.precision[i], self.recall[i]
            )?;
        }
        Ok(())
    }
}

/// Evaluates any probability function over `rows`; shared by the float and
/// quantized paths.
pub fn evaluate_with<F>(
    labels: &[String],
    rows: &[Vec<f64>],
    truth: &[usize],
    min_confidence: f64,
    mut predict: F,
) -> Result<EvalReport, ModelError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, ModelError>,
{
    if rows.is_empty() {
        return Err(ModelError::Empty("test set"));
    }
    let k = labels.len();
    let mut confusion = vec![vec![0usize; k]; k];
    let mut rejected_per_class = vec![0usize; k];
    let mut correct = 0;
    for (row, &y) in rows.iter().zip(truth) {
        let p = predict(row)?;
        let best = argmax(&p);
        if p[best] >= min_confidence {
            confusion[y][best] += 1;
            if best == y {
                correct += 1;
            }
        } else {
            rejected_per_class[y] += 1;
        }
    }
    let precision = (0..k)
        .map(|c| {
            let col: usize = confusion.iter().map(|r| r[c]).sum();
            if col == 0 {
                0.0
            } else {
                confusion[c][c] as f64 / col as f64
            }
        })
        .collect();
    let recall = (0..k)
        .map(|c| {
            let n = confusion[c].iter().sum::<usize>() + rejected_per_class[c];
            if n == 0 {
                0.0
            } else {
                confusion[c][c] as f64 / n as f64
            }
        })
        .collect();
    Ok(EvalReport {
        labels: labels.to_vec(),
        min_confidence,
        total: rows.len(),
        correct,
        accuracy: correct as f64 / rows.len() as f64,
        rejected: rejected_per_class.iter().sum(),
        rejected_per_class,
        confusion,
        precision,
        recall,
    })
}

pub fn evaluate(
    params: &ModelParams,
    test: &FeatureMatrix,
    min_confidence: f64,
) -> Result<EvalReport, ModelError> {
    evaluate_with(&params.labels, &test.rows, &test.labels, min_confidence, |row| {
        params.forward(row)
    })
}
