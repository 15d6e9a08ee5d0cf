use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use scatternet_bench::topology;
use scatternet_core::heuristic::build_hierarchy;
use scatternet_core::model::ModelParams;

fn heuristic(c: &mut Criterion) {
    let p = ModelParams::default();
    let mut group = c.benchmark_group("heuristic");
    for n in [100, 200, 400, 800] {
        let topo = topology(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &topo, |b, t| b.iter(|| build_hierarchy(t, &p)));
    }
    group.finish();
}

criterion_group!(benches, heuristic);
criterion_main!(benches);
