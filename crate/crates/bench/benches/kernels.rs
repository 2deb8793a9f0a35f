use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use orlicz::modular::luxemburg_norm;
use orlicz::props::log_grid;
use orlicz::solver::{solve_dirichlet, SolveOptions};
use orlicz::{DiscreteOperator, GridFunction, PhiFunction, Variant};
use orlicz_bench::{double_phase, interval, sample, square};

fn conjugate(c: &mut Criterion) {
    let ss = log_grid(1e-2, 1e2, 64);
    let mut group = c.benchmark_group("conjugate");
    group.throughput(Throughput::Elements(ss.len() as u64));
    let cases = [("power_closed_form", PhiFunction::power(3.0).unwrap()), ("double_phase_numeric", double_phase())];
    for (name, phi) in cases {
        group.bench_function(name, |b| {
            b.iter(|| ss.iter().map(|&s| phi.conjugate_eval([0.5, 0.0], black_box(s)).unwrap()).sum::<f64>())
        });
    }
    group.finish();
}

fn norm(c: &mut Criterion) {
    let phi = double_phase();
    let mut group = c.benchmark_group("luxemburg_norm");
    for n in [101, 1001, 10001] {
        let u = sample(&interval(n), false);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| b.iter(|| luxemburg_norm(&phi, u).unwrap()));
    }
    group.finish();
}

fn residual(c: &mut Criterion) {
    let mut group = c.benchmark_group("residual");
    for (label, grid) in [("1d_10001", interval(10001)), ("2d_101", square(101))] {
        let op = DiscreteOperator::new(double_phase(), grid.clone(), Variant::A);
        let u = sample(&grid, true).into_values();
        let f = vec![1.0; grid.len()];
        group.throughput(Throughput::Elements(grid.len() as u64));
        group.bench_function(label, |b| b.iter(|| op.residual_values(black_box(&u), &f)));
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let cases = [
        ("p3_1d_401", PhiFunction::power(3.0).unwrap().with_normalized(true), interval(401)),
        ("double_phase_1d_201", double_phase(), interval(201)),
        ("p3_2d_41", PhiFunction::power(3.0).unwrap(), square(41)),
    ];
    for (label, phi, grid) in cases {
        let op = DiscreteOperator::new(phi, grid.clone(), Variant::A);
        let f = GridFunction::from_fn(grid, |_| 1.0);
        let opts = SolveOptions::for_phi(op.phi());
        group.bench_function(label, |b| b.iter(|| solve_dirichlet(&op, &f, &opts).unwrap().iterations));
    }
    group.finish();
}

criterion_group!(benches, conjugate, norm, residual, solve);
criterion_main!(benches);
