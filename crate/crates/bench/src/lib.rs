//! Deterministic inputs shared by the benchmarks.

use tinyml_core::model::{ModelParams, Topology};
use tinyml_core::quant::{calibrate, quantize};
use tinyml_core::{DatasetKind, DspConfig, QuantizedModel};

/// A smooth multi-tone signal of `n` samples.
pub fn signal(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64;
            0.5 * (t * 0.013).sin() + 0.3 * (t * 0.171).sin() + 0.1 * (t * 0.9).cos()
        })
        .collect()
}

/// One channel-major window of the kind's geometry.
pub fn window(kind: DatasetKind) -> Vec<f64> {
    signal(kind.channels() * kind.window_len())
}

/// Untrained but calibrated int8 model behind the kind's default DSP block.
pub fn quantized_model(kind: DatasetKind, hidden: &[usize]) -> QuantizedModel {
    let input = DspConfig::default_for(kind).feature_len();
    let topology = Topology::new(input, hidden.to_vec(), 4).expect("valid topology");
    let params = ModelParams::init(&topology, 7).expect("valid init");
    let rows: Vec<Vec<f64>> = (0..16).map(|r| signal(input + r)[r..].to_vec()).collect();
    quantize(&params, &calibrate(&params, &rows).expect("enough rows")).expect("quantizes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_expected_shapes() {
        assert_eq!(window(DatasetKind::Gesture).len(), 600);
        let qm = quantized_model(DatasetKind::Keyword, &[20, 10]);
        assert_eq!(qm.input_dim(), 793);
        assert!(qm.forward(&signal(793)).is_ok());
    }
}
