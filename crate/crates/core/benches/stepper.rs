use std::f64::consts::PI;
use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use plap_core::evolver::{cfl_dt, step, Problem, SolverControls};
use plap_core::harness::{run_sweep, SweepPlan};
use plap_core::operator::{OperatorSpec, PerturbAxis};
use plap_core::{Boundary, Execution, GridSpec, ScalarFn};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn problem(n: usize, execution: Execution) -> Problem {
    let grid = GridSpec::square_2d(0.0, 2.0 * PI, n, Boundary::Periodic).unwrap();
    let data: ScalarFn = Arc::new(|x: &[f64], _| x[0].cos() + 0.5 * (2.0 * x[1]).sin());
    Problem::new(
        OperatorSpec::general_pq(3.0, 2.5).unwrap(),
        grid,
        data,
        0.05,
    )
    .unwrap()
    .with_controls(SolverControls {
        execution,
        ..Default::default()
    })
    .unwrap()
}

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step_2d");
    for n in [64, 256] {
        for (name, exec) in MODES {
            let prob = problem(n, exec);
            let u0 = prob.initial_field().unwrap();
            let dt = cfl_dt(&prob, &u0).unwrap();
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| step(black_box(&u0), &prob, dt).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep_2d");
    group.sample_size(10);
    for (name, exec) in MODES {
        let base = problem(32, exec);
        let mut plan =
            SweepPlan::new(base, PerturbAxis::P, vec![0.2, 0.1, 0.05, 0.025], vec![]).unwrap();
        plan.execution = exec;
        plan.measure_floor = false;
        group.bench_function(name, |b| b.iter(|| run_sweep(black_box(&plan)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_step, bench_sweep);
criterion_main!(benches);
