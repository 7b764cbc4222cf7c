use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tinyml_bench::{signal, window};
use tinyml_core::dsp::Fft;
use tinyml_core::{DatasetKind, DspConfig};

fn fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_real");
    for n in [128usize, 512, 4096] {
        let plan = Fft::new(n).unwrap();
        let x = signal(n);
        let mut scratch = Vec::with_capacity(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| {
            b.iter(|| plan.real_forward(black_box(x), &mut scratch))
        });
    }
    group.finish();
}

fn features(c: &mut Criterion) {
    let mut group = c.benchmark_group("features");
    for kind in [DatasetKind::Gesture, DatasetKind::Keyword] {
        let extractor = DspConfig::default_for(kind).extractor().unwrap();
        let w = window(kind);
        let name = match kind {
            DatasetKind::Gesture => "spectral",
            DatasetKind::Keyword => "mfcc",
        };
        group.bench_function(name, |b| {
            b.iter(|| extractor.extract_raw(black_box(&w), kind.channels()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, fft, features);
criterion_main!(benches);
