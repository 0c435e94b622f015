use std::hint::black_box;

use ars_bench::short_wing_rock;
use ars_core::{run, LawKind};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

// 0.5 s of simulated time is 5000 RK4 steps at the default step
fn laws(c: &mut Criterion) {
    let mut g = c.benchmark_group("wing_rock_0.5s");
    g.sample_size(10);
    for law in [
        LawKind::Proposed,
        LawKind::Mrac,
        LawKind::Switched,
        LawKind::FeCmrac,
        LawKind::El,
    ] {
        let sc = short_wing_rock(law, 0.5);
        g.bench_with_input(BenchmarkId::from_parameter(law), &sc, |b, sc| {
            b.iter(|| run(black_box(sc)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, laws);
criterion_main!(benches);
