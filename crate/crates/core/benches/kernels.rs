use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracvisco::exec::Exec;
use fracvisco::fem::{assemble_stiffness_with, error_norms_with, FeSpace, Material};
use fracvisco::fracquad::{combine_history, FracWeights};
use fracvisco::manufactured::ManufacturedCase;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn kernels(c: &mut Criterion) {
    let space = FeSpace::unit_square(64, 2).unwrap();
    let material = Material::default();
    let k = assemble_stiffness_with(&space, &material, Exec::Sequential);
    let x: Vec<f64> = (0..k.nrows()).map(|i| (i as f64 * 0.37).sin()).collect();

    let mut g = c.benchmark_group("spmv");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| k.spmv_with(e, black_box(&x)).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("stiffness_assembly");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| assemble_stiffness_with(black_box(&space), &material, e))
        });
    }
    g.finish();

    let weights = FracWeights::new(0.5, 1.0, 128).unwrap();
    let history: Vec<Vec<f64>> = (0..=64).map(|n| x.iter().map(|v| v * n as f64).collect()).collect();
    let coefs = weights.step_history_coefficients(64);
    let mut g = c.benchmark_group("combine_history");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| combine_history(e, &coefs, black_box(&history)).unwrap())
        });
    }
    g.finish();

    let case = ManufacturedCase::example1(material);
    let exact = case.at_time(1.0);
    let u = space.interpolate(|p| case.exact_velocity(p, 0.9));
    let mut g = c.benchmark_group("error_norms");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| error_norms_with(&space, Some(black_box(&u)), &exact, &material, 8, e))
        });
    }
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
