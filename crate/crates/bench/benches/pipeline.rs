use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use crystal_core::{
    denseness_radius, finite_type_gap, gen_ideal_crystal, generate, is_almost_period,
    recover_crystal, verify_exact_period, GeneratorSpec, Point, RecoveryConfig, TOL_EXACT,
};

fn plane_crystal(radius: f64) -> crystal_core::WindowedSet {
    let basis = [Point::from([1.0, 0.0]), Point::from([0.2, 1.1])];
    let residues = [Point::from([0.0, 0.0]), Point::from([0.31, 0.4])];
    gen_ideal_crystal(&basis, &residues, radius).unwrap()
}

fn stages(c: &mut Criterion) {
    let set = plane_crystal(40.0);
    let d = denseness_radius(&set, 4.0).unwrap();
    let t = Point::from([1.2, 1.1]);
    let mut group = c.benchmark_group("stages");
    group.bench_function("finite_type_gap", |b| {
        b.iter(|| finite_type_gap(black_box(&set), d).unwrap())
    });
    group.bench_function("is_almost_period", |b| {
        b.iter(|| is_almost_period(black_box(&set), &t, 0.1).unwrap())
    });
    group.bench_function("verify_exact_period", |b| {
        b.iter(|| verify_exact_period(black_box(&set), &t, TOL_EXACT).unwrap())
    });
    group.finish();
}

fn recovery(c: &mut Criterion) {
    let config = RecoveryConfig::default();
    let mut group = c.benchmark_group("recover_crystal");
    group.sample_size(10);
    for radius in [20.0, 40.0, 80.0] {
        let set = plane_crystal(radius);
        group.bench_with_input(BenchmarkId::new("crystal", set.len()), &set, |b, s| {
            b.iter(|| recover_crystal(s, &config).unwrap())
        });
    }
    let fib = generate(&GeneratorSpec::fibonacci(400.0)).unwrap();
    group.bench_with_input(BenchmarkId::new("fibonacci", fib.len()), &fib, |b, s| {
        b.iter(|| recover_crystal(s, &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, stages, recovery);
criterion_main!(benches);
