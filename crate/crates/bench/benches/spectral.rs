use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use warpcone::spectral::{spectral_gap, SpectralOptions};
use warpcone::{FiniteQuotientGroup, Multigraph};

fn cycles(c: &mut Criterion) {
    let opts = SpectralOptions::default();
    let mut group = c.benchmark_group("spectral_gap/cycle");
    for m in [64usize, 256, 512] {
        let g = Multigraph::cycle(m);
        group.bench_with_input(BenchmarkId::from_parameter(m), &g, |b, g| b.iter(|| spectral_gap("cycle", black_box(g), &opts).unwrap()));
    }
    group.finish();
}

fn special_linear(c: &mut Criterion) {
    let opts = SpectralOptions::default();
    let mut group = c.benchmark_group("spectral_gap/sl2");
    group.sample_size(10);
    for modulus in [9u64, 27] {
        let g = FiniteQuotientGroup::special_linear(2, modulus, 100_000).unwrap().cayley_graph();
        group.bench_with_input(BenchmarkId::from_parameter(modulus), &g, |b, g| b.iter(|| spectral_gap("sl2", black_box(g), &opts).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, cycles, special_linear);
criterion_main!(benches);
