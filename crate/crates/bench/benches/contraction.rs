use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use procten::network::contract;
use procten::Scheme;
use procten_bench::ohmic_fixture;

fn schemes(c: &mut Criterion) {
    procten::tensor::set_linalg_threads(1);
    let mut group = c.benchmark_group("contract");
    group.sample_size(10);
    for k in [25, 50, 100] {
        let (bset, grid) = ohmic_fixture(0.3, k);
        for scheme in [Scheme::Local, Scheme::Nonlocal] {
            group.bench_with_input(BenchmarkId::new(scheme.name(), k), &k, |b, _| {
                b.iter(|| contract(scheme, &bset, &grid, 1e-6).unwrap())
            });
        }
    }
    group.finish();
}

fn kernel(c: &mut Criterion) {
    c.bench_function("memory_kernel_k200", |b| b.iter(|| ohmic_fixture(0.7, 200)));
}

criterion_group!(benches, schemes, kernel);
criterion_main!(benches);
