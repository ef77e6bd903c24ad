use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use eulerspec_core::lab::{discretize_l0, skewness, Grid2D};
use eulerspec_core::period::{period_ode, sample_period_function};
use eulerspec_core::spectrum::{assemble_from_ranges, gap_report, FamilyPeriods, SpectrumOptions};
use eulerspec_core::topology::{build_index_set, find_fixed_points};
use eulerspec_core::{make_builtin_flow, StreamField, Tolerances};

fn flow(name: &str) -> StreamField {
    make_builtin_flow(name, &BTreeMap::new()).unwrap()
}

fn topology(c: &mut Criterion) {
    let tol = Tolerances::default();
    let mut group = c.benchmark_group("index_set");
    group.sample_size(10);
    for name in ["shear_quadratic", "radial_cos", "cellular"] {
        let f = flow(name);
        let s = f.scales(&tol);
        group.bench_function(name, |b| {
            b.iter(|| {
                let fps = find_fixed_points(&f, 64, &tol).unwrap();
                black_box(build_index_set(&f, &fps, 64, &s).unwrap())
            })
        });
    }
    group.finish();
}

fn periods(c: &mut Criterion) {
    let tol = Tolerances::default();
    let f = flow("radial_cos");
    let s = f.scales(&tol);
    c.bench_function("period_ode/radial_cos", |b| b.iter(|| period_ode(&f, black_box([1.0, 0.3]), &s).unwrap()));

    let f = flow("annulus_shear");
    let s = f.scales(&tol);
    let fps = find_fixed_points(&f, 64, &tol).unwrap();
    let ix = build_index_set(&f, &fps, 64, &s).unwrap();
    let mut group = c.benchmark_group("period_function/annulus_shear");
    group.sample_size(10);
    for n in [16, 32] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| sample_period_function(&f, &ix.families[0], n, &s).unwrap())
        });
    }
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let opts = SpectrumOptions::default();
    let mut group = c.benchmark_group("spectrum");
    for window in [20.0, 200.0] {
        let fams = [
            FamilyPeriods { family: 0, t_lo: 3.0, t_hi: Some(4.0) },
            FamilyPeriods { family: 1, t_lo: 5.1, t_hi: Some(5.3) },
        ];
        group.bench_with_input(BenchmarkId::from_parameter(window), &window, |b, &w| {
            b.iter(|| {
                let s = assemble_from_ranges(&fams, w, &opts).unwrap();
                black_box(gap_report(&s, &opts).unwrap())
            })
        });
    }
    group.finish();
}

fn operators(c: &mut Criterion) {
    let f = flow("shear_quadratic");
    let mut group = c.benchmark_group("l0");
    group.sample_size(10);
    for n in [16, 32] {
        let grid = Grid2D::new(&f.domain, n, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, grid| {
            b.iter(|| skewness(&discretize_l0(&f, grid).unwrap().matrix))
        });
    }
    group.finish();
}

criterion_group!(benches, topology, periods, spectrum, operators);
criterion_main!(benches);
