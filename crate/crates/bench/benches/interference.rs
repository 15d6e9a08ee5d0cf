use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use scatternet_core::interference::{simulate_fer, FerConfig};

fn interference(c: &mut Criterion) {
    let mut group = c.benchmark_group("fer_monte_carlo");
    group.sample_size(10);
    for p in [2, 4, 8] {
        let cfg = FerConfig { piconets: p, runs: 4, ..FerConfig::default() };
        group.bench_with_input(BenchmarkId::from_parameter(p), &cfg, |b, cfg| b.iter(|| simulate_fer(cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, interference);
criterion_main!(benches);
