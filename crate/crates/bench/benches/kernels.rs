use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use tandyn_core::{classify_grid, iterate, preimages, stable_tan, Alpha, GridSpec, IterationBudget, MapParams, Rect};

fn tan(c: &mut Criterion) {
    let mut group = c.benchmark_group("stable_tan");
    for (name, z) in [
        ("moderate", Complex64::new(0.7, -0.9)),
        ("near_pole", Complex64::new(PI / 2.0 + 1e-6, 0.0)),
        ("asymptotic", Complex64::new(0.3, 40.0)),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &z, |b, &z| {
            b.iter(|| stable_tan(black_box(z)))
        });
    }
    group.finish();
}

fn orbits(c: &mut Criterion) {
    let attracting = MapParams::new(Complex64::new(0.0, 2f64.sqrt()), 1, None).unwrap();
    let parabolic = MapParams::from_alpha(Alpha::rational(1, 8).unwrap(), 1).unwrap();
    let seed = Complex64::new(PI / 2.0 + 0.2, -0.9);

    c.bench_function("iterate/attracting", |b| {
        let budget = IterationBudget::default();
        b.iter(|| iterate(&attracting, black_box(seed), &budget))
    });
    c.bench_function("iterate/parabolic", |b| {
        let budget = IterationBudget::for_regime(&parabolic.regime());
        b.iter(|| iterate(&parabolic, black_box(seed), &budget))
    });
    c.bench_function("preimages/16x16", |b| {
        let z0 = attracting.lattice().unwrap().point(0);
        let target = attracting.eval(z0 + 0.15).unwrap();
        let rect = Rect::around(z0, 0.5);
        b.iter(|| preimages(&attracting, black_box(target), &rect, 16))
    });
}

fn grids(c: &mut Criterion) {
    let mut group = c.benchmark_group("classify_grid");
    group.sample_size(10);
    let p = MapParams::from_alpha(Alpha::rational(1, 8).unwrap(), 0).unwrap();
    let z0 = p.lattice().unwrap().point(0);
    let budget = IterationBudget {
        max_iter: 5_000,
        ..IterationBudget::for_regime(&p.regime())
    };
    for n in [32usize, 64] {
        let g = GridSpec::new(z0.re - PI / 2.0, z0.re + PI / 2.0, -2.0, 0.0, n, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| classify_grid(&p, g, &budget, Some(1)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, tan, orbits, grids);
criterion_main!(benches);
