use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tinyml_bench::{quantized_model, signal, window};
use tinyml_core::runtime::{Deployment, StreamClassifier};
use tinyml_core::{DatasetKind, DspConfig, RuntimeConfig};

fn q_forward(c: &mut Criterion) {
    let mut group = c.benchmark_group("q_forward");
    for (name, kind) in [("gesture", DatasetKind::Gesture), ("keyword", DatasetKind::Keyword)] {
        let qm = quantized_model(kind, &[20, 10]);
        let x = signal(qm.input_dim());
        group.bench_function(name, |b| b.iter(|| qm.forward(black_box(&x)).unwrap()));
    }
    group.finish();
}

fn stream_hop(c: &mut Criterion) {
    let kind = DatasetKind::Gesture;
    let deployment = Deployment {
        model: quantized_model(kind, &[20, 10]),
        dsp: DspConfig::default_for(kind),
        runtime: RuntimeConfig::default(),
    };
    let mut sc = StreamClassifier::new(deployment).unwrap();
    let data = window(kind);
    let n = kind.window_len();
    let stride = kind.stride();
    let hop: Vec<&[f64]> = (0..3).map(|ch| &data[ch * n..ch * n + stride]).collect();
    c.bench_function("stream_hop/gesture", |b| b.iter(|| sc.push_samples(black_box(&hop)).unwrap()));
}

criterion_group!(benches, q_forward, stream_hop);
criterion_main!(benches);
