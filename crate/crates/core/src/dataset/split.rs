use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 42,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.train_fraction > 0.0 && self.train_fraction < 1.0 {
            Ok(())
        } else {
            Err(DatasetError::BadFraction(self.train_fraction))
        }
    }

    /// `floor(fraction * n)`, nudged so that e.g. 0.29 * 100 lands on 29.
    pub fn train_count(&self, n: usize) -> usize {
        ((self.train_fraction * n as f64) + 1e-9).floor() as usize
    }
}

/// Stratified shuffle split: per label, `floor(fraction * n)` windows go to
/// train and the rest to test. Both halves keep the dataset's window order.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), DatasetError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut in_train = vec![false; ds.windows.len()];
    for label in &ds.labels {
        let mut idx: Vec<usize> = ds
            .windows
            .iter()
            .enumerate()
            .filter(|(_, w)| &w.label == label)
            .map(|(i, _)| i)
            .collect();
        if idx.len() < 2 {
            return Err(DatasetError::TooFewWindows {
                label: label.clone(),
                count: idx.len(),
            });
        }
        idx.shuffle(&mut rng);
        for &i in &idx[..spec.train_count(idx.len())] {
            in_train[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (w, t) in ds.windows.iter().zip(in_train) {
        if t {
            train.push(w.clone());
        } else {
            test.push(w.clone());
        }
    }
    Ok((
        Dataset::new(ds.kind, ds.labels.clone(), train)?,
        Dataset::new(ds.kind, ds.labels.clone(), test)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetKind, LabeledWindow, Origin};
    use std::collections::HashSet;

    fn dataset(per_label: &[(&str, usize)]) -> Dataset {
        let mut windows = Vec::new();
        for (label, n) in per_label {
            for i in 0..*n {
                windows.push(LabeledWindow {
                    label: label.to_string(),
                    channels: 1,
                    data: vec![i as f64],
                    origin: Origin {
                        source_id: format!("{label}/{i}"),
                        start: 0,
                    },
                });
            }
        }
        let labels = per_label.iter().map(|(l, _)| l.to_string()).collect();
        Dataset::new(DatasetKind::Keyword, labels, windows).unwrap()
    }

    #[test]
    fn eighty_twenty() {
        let ds = dataset(&[("a", 100)]);
        let (train, test) = split(&ds, &SplitSpec::default()).unwrap();
        assert_eq!((train.len(), test.len()), (80, 20));
    }

    #[test]
    fn floor_per_label() {
        let ds = dataset(&[("a", 5), ("b", 5), ("c", 5), ("d", 5)]);
        let (train, test) = split(&ds, &SplitSpec::default()).unwrap();
        assert_eq!(train.count_per_label(), vec![4; 4]);
        assert_eq!(test.count_per_label(), vec![1; 4]);
    }

    #[test]
    fn deterministic_partition() {
        let ds = dataset(&[("a", 17), ("b", 9)]);
        let spec = SplitSpec { train_fraction: 0.7, seed: 9 };
        let (a1, b1) = split(&ds, &spec).unwrap();
        let (a2, b2) = split(&ds, &spec).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        let ids: HashSet<_> = a1.windows.iter().map(|w| w.origin.clone()).collect();
        assert!(b1.windows.iter().all(|w| !ids.contains(&w.origin)));
        assert_eq!(a1.len() + b1.len(), ds.len());
        let other = split(&ds, &SplitSpec { seed: 10, ..spec }).unwrap().0;
        assert_ne!(other, a1);
    }

    #[test]
    fn errors() {
        let ds = dataset(&[("a", 5), ("b", 1)]);
        assert!(matches!(
            split(&ds, &SplitSpec::default()),
            Err(DatasetError::TooFewWindows { count: 1, .. })
        ));
        let ds = dataset(&[("a", 5)]);
        for f in [0.0, 1.0, -0.5, 1.5] {
            let spec = SplitSpec { train_fraction: f, seed: 0 };
            assert!(matches!(split(&ds, &spec), Err(DatasetError::BadFraction(_))));
        }
    }

    #[test]
    fn train_count_floor() {
        let s = |f| SplitSpec { train_fraction: f, seed: 0 };
        assert_eq!(s(0.29).train_count(100), 29);
        assert_eq!(s(0.8).train_count(7), 5);
        assert_eq!(s(0.99).train_count(2), 1);
    }
}
