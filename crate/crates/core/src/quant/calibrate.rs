use serde::{Deserialize, Serialize};

use super::QuantError;
use crate::model::ModelParams;

pub const MIN_CALIBRATION_ROWS: usize = 10;
const DEGENERATE_HALF_WIDTH: f64 = 1e-6;

/// Observed `(min, max)` at each layer boundary: `[0]` is the normalized
/// input, `[l + 1]` the pre-activation output of layer `l` (the last entry
/// is the logits, which stay float).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationRanges {
    pub ranges: Vec<(f64, f64)>,
}

impl ActivationRanges {
    pub fn contains(&self, other: &ActivationRanges) -> bool {
        self.ranges.len() == other.ranges.len()
            && self
                .ranges
                .iter()
                .zip(&other.ranges)
                .all(|(a, b)| a.0 <= b.0 && a.1 >= b.1)
    }
}

/// Runs the float network over raw calibration rows and records min/max at
/// every boundary. A zero-width range is widened to `±1e-6` around its value.
pub fn calibrate(params: &ModelParams, rows: &[Vec<f64>]) -> Result<ActivationRanges, QuantError> {
    if rows.is_empty() {
        return Err(QuantError::EmptyCalibration);
    }
    if rows.len() < MIN_CALIBRATION_ROWS {
        return Err(QuantError::TooFewCalibrationRows {
            min: MIN_CALIBRATION_ROWS,
            found: rows.len(),
        });
    }
    let n = params.layers.len();
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); n + 1];
    let mut observe = |slot: usize, values: &[f64]| {
        let r = &mut ranges[slot];
        for &v in values {
            r.0 = r.0.min(v);
            r.1 = r.1.max(v);
        }
    };
    for row in rows {
        if row.len() != params.topology.input_dim {
            return Err(crate::model::ModelError::DimensionMismatch {
                expected: params.topology.input_dim,
                found: row.len(),
            }
            .into());
        }
        let mut a = params.norm.apply(row);
        observe(0, &a);
        for (l, layer) in params.layers.iter().enumerate() {
            let z = layer.apply(&a);
            observe(l + 1, &z);
            a = z.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    for r in &mut ranges {
        if r.0 == r.1 {
            *r = (r.0 - DEGENERATE_HALF_WIDTH, r.1 + DEGENERATE_HALF_WIDTH);
        }
    }
    Ok(ActivationRanges { ranges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Topology;

    fn model() -> ModelParams {
        ModelParams::init(&Topology::new(3, vec![4], 2).unwrap(), 2).unwrap()
    }

    fn rows(offset: usize, n: usize) -> Vec<Vec<f64>> {
        (offset..offset + n)
            .map(|i| (0..3).map(|j| ((i * 5 + j) as f64 * 0.91).cos() * (1 + i % 4) as f64).collect())
            .collect()
    }

    #[test]
    fn zero_network_ranges_widened() {
        let mut p = model();
        p.layers.iter_mut().for_each(|l| l.weights.iter_mut().for_each(|w| *w = 0.0));
        let r = calibrate(&p, &vec![vec![0.0; 3]; 10]).unwrap();
        assert_eq!(r.ranges, vec![(-1e-6, 1e-6); 3]);
    }

    #[test]
    fn superset_contains_subset() {
        let p = model();
        let a = rows(0, 12);
        let mut ab = a.clone();
        ab.extend(rows(100, 20));
        let ra = calibrate(&p, &a).unwrap();
        let rab = calibrate(&p, &ab).unwrap();
        assert!(rab.contains(&ra));
    }

    #[test]
    fn errors() {
        let p = model();
        assert!(matches!(calibrate(&p, &[]), Err(QuantError::EmptyCalibration)));
        assert!(matches!(
            calibrate(&p, &rows(0, 9)),
            Err(QuantError::TooFewCalibrationRows { found: 9, .. })
        ));
        assert!(calibrate(&p, &vec![vec![0.0; 2]; 10]).is_err());
    }

    #[test]
    fn one_range_per_boundary() {
        let p = model();
        assert_eq!(calibrate(&p, &rows(0, 10)).unwrap().ranges.len(), p.layers.len() + 1);
    }
}
