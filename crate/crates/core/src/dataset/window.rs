use super::{LabeledWindow, Origin, Recording};

/// Cuts `rec` into windows at offsets `0, stride, 2*stride, ...`; a trailing
/// partial window is dropped. A recording shorter than one window yields no
/// windows and a warning.
pub fn window(rec: &Recording, window_len: usize, stride: usize) -> Vec<LabeledWindow> {
    assert!(stride >= 1, "stride must be at least 1");
    assert!(window_len >= 1, "window_len must be at least 1");
    let len = rec.len();
    if window_len > len {
        log::warn!(
            "{}: recording has {len} samples, shorter than window of {window_len}; skipped",
            rec.source_id
        );
        return Vec::new();
    }
    (0..=len - window_len)
        .step_by(stride)
        .map(|start| {
            let mut data = Vec::with_capacity(rec.channels() * window_len);
            for ch in &rec.samples {
                data.extend_from_slice(&ch[start..start + window_len]);
            }
            LabeledWindow {
                label: rec.label.clone(),
                channels: rec.channels(),
                data,
                origin: Origin {
                    source_id: rec.source_id.clone(),
                    start,
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(len: usize) -> Recording {
        let ch: Vec<f64> = (0..len).map(|i| i as f64).collect();
        Recording::new("l", 100.0, vec![ch.clone(), ch.clone(), ch], "r").unwrap()
    }

    #[test]
    fn offsets() {
        let starts = |len, w, s| -> Vec<usize> {
            window(&ramp(len), w, s).iter().map(|w| w.origin.start).collect()
        };
        assert_eq!(starts(400, 200, 100), vec![0, 100, 200]);
        assert_eq!(starts(200, 200, 100), vec![0]);
        assert!(starts(199, 200, 100).is_empty());
    }

    #[test]
    fn window_data_is_channel_major() {
        let w = &window(&ramp(10), 4, 3)[1];
        assert_eq!(w.data.len(), 12);
        assert_eq!(w.channel(0), &[3.0, 4.0, 5.0, 6.0]);
        assert_eq!(w.channel(2), &[3.0, 4.0, 5.0, 6.0]);
        assert_eq!(w.label, "l");
    }

    proptest! {
        #[test]
        fn offsets_are_progression_inside_recording(len in 1usize..500, wl in 1usize..200, stride in 1usize..100) {
            let ws = window(&ramp(len), wl, stride);
            for (i, w) in ws.iter().enumerate() {
                prop_assert_eq!(w.origin.start, i * stride);
                prop_assert!(w.origin.start + wl <= len);
                prop_assert_eq!(w.data.len(), 3 * wl);
            }
            if wl <= len {
                prop_assert_eq!(ws.len(), (len - wl) / stride + 1);
            } else {
                prop_assert!(ws.is_empty());
            }
        }
    }
}
