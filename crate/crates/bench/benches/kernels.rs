use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use parisian_core::parisian::parisian_sup_inf_values;
use parisian_core::rng::replicate_rng;
use parisian_core::{
    estimate_ruin, sample_fbm, sliding_min, FbmGridSampler, McParams, Source, SyntheticProcessSpec, Threshold,
    Vicinity, WindowRule, WindowSpec,
};
use rand::Rng;

fn noise(n: usize) -> Vec<f64> {
    let mut rng = replicate_rng(1, 0);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn bench_sliding(c: &mut Criterion) {
    let values = noise(1_000_000);
    let mut g = c.benchmark_group("sliding_min");
    for w in [10usize, 1000] {
        g.bench_with_input(BenchmarkId::new("n=1e6", w), &w, |b, &w| {
            b.iter(|| sliding_min(black_box(&values), w).unwrap())
        });
    }
    g.bench_function("sup_inf n=1e6 w=1000", |b| {
        b.iter(|| parisian_sup_inf_values(black_box(&values), (0, values.len() - 1001), WindowSpec::steps(1000)).unwrap())
    });
    g.finish();
}

fn bench_fbm(c: &mut Criterion) {
    let mut g = c.benchmark_group("fbm");
    for n in [1024usize, 65_536] {
        g.bench_with_input(BenchmarkId::new("sample_fbm H=0.3", n), &n, |b, &n| {
            b.iter(|| sample_fbm(0.3, n, 1.0 / n as f64, black_box(7)).unwrap())
        });
    }
    let sampler = FbmGridSampler::new(0.7, 0.5, 4096, 1e-3).unwrap();
    g.bench_function("shifted origin n=4096", |b| {
        let mut i = 0u64;
        b.iter(|| {
            i += 1;
            sampler.sample(&mut replicate_rng(3, i))
        })
    });
    g.finish();
}

fn bench_ruin(c: &mut Criterion) {
    let spec = SyntheticProcessSpec::new(0.4, 1.0, 0.7, 1.0, 0.5).unwrap();
    let source = Source::Synthetic(spec);
    let params = McParams {
        replicates: 2_000,
        seed: 5,
        vicinity: Some(Vicinity::Log),
        workers: Some(1),
        ..McParams::default()
    };
    let mut g = c.benchmark_group("mc_ruin");
    g.sample_size(10);
    g.bench_function("talagrand u=3 reps=2000", |b| {
        b.iter(|| estimate_ruin(&source, Threshold::U(3.0), WindowRule::AssumptionB(1.0), &params).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bench_sliding, bench_fbm, bench_ruin);
criterion_main!(benches);
