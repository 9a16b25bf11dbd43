use std::f64::consts::PI;
use std::sync::Arc;

use plap_core::evolver::{solve, step, Problem, SolverControls};
use plap_core::exact::ExactSolution;
use plap_core::operator::{HamiltonianSpec, OperatorSpec};
use plap_core::{sup_diff, Boundary, Execution, GridSpec, ScalarField, ScalarFn};
use proptest::prelude::*;

fn mixed_data() -> ScalarFn {
    Arc::new(|x: &[f64], _| x[0].cos() + 0.5 * (2.0 * x[1]).sin() + 0.3 * (x[0] + x[1]).cos())
}

fn solve_with(spec: OperatorSpec, exec: Execution) -> Vec<ScalarField> {
    let grid = GridSpec::square_2d(0.0, 2.0 * PI, 40, Boundary::Periodic).unwrap();
    let controls = SolverControls {
        snapshot_times: vec![0.05, 0.1],
        execution: exec,
        ..Default::default()
    };
    let prob = Problem::new(spec, grid, mixed_data(), 0.15)
        .unwrap()
        .with_controls(controls)
        .unwrap();
    solve(&prob).unwrap().snapshots
}

#[test]
fn repeated_solves_are_bit_identical() {
    let spec = OperatorSpec::general_pq(3.0, 2.5).unwrap();
    assert_eq!(
        solve_with(spec, Execution::Parallel),
        solve_with(spec, Execution::Parallel)
    );
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    for spec in [
        OperatorSpec::normalized(3.0).unwrap(),
        OperatorSpec::regularized_pq(1.0, 2.0, 0.1).unwrap(),
        OperatorSpec::biased_infinity_regularized(0.5, 0.2, 0.1).unwrap(),
    ] {
        assert_eq!(
            solve_with(spec, Execution::Sequential),
            solve_with(spec, Execution::Parallel),
            "{spec:?}"
        );
    }
}

#[test]
fn heat_mode_error_is_second_order() {
    let exact = ExactSolution::heat_mode(2.5, 1).unwrap();
    let error = |n: usize| {
        let grid = GridSpec::uniform_1d(0.0, 2.0 * PI, n, Boundary::Periodic).unwrap();
        let prob = Problem::new(
            OperatorSpec::normalized(2.5).unwrap(),
            grid.clone(),
            exact.as_data(0.0),
            0.3,
        )
        .unwrap();
        let sol = solve(&prob).unwrap();
        let reference = ScalarField::from_fn(&grid, 0.3, |x| exact.eval(x, 0.3).unwrap()).unwrap();
        sup_diff(sol.final_field(), &reference).unwrap()
    };
    let errors: Vec<f64> = [32, 64, 128, 256].into_iter().map(error).collect();
    for w in errors.windows(2) {
        assert!(w[0] / w[1] >= 3.0, "errors {errors:?}");
    }
}

#[test]
fn mean_curvature_regularization_gap_shrinks_with_eps() {
    let grid = GridSpec::square_2d(0.0, 2.0 * PI, 32, Boundary::Periodic).unwrap();
    let run = |eps: f64| {
        let spec = OperatorSpec::regularized_pq(1.0, 2.0, eps).unwrap();
        let prob = Problem::new(spec, grid.clone(), mixed_data(), 0.25).unwrap();
        solve(&prob).unwrap().final_field().clone()
    };
    let base = run(0.0);
    let gaps: Vec<f64> = [0.2, 0.1, 0.05]
        .into_iter()
        .map(|eps| sup_diff(&run(eps), &base).unwrap())
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "gaps {gaps:?}");
}

#[test]
fn zero_horizon_yields_the_initial_field_once() {
    let grid = GridSpec::uniform_1d(0.0, 1.0, 16, Boundary::Dirichlet).unwrap();
    let data: ScalarFn = Arc::new(|x: &[f64], _| x[0] * x[0]);
    let prob = Problem::new(OperatorSpec::variational(3.0).unwrap(), grid, data, 0.0).unwrap();
    let sol = solve(&prob).unwrap();
    assert_eq!(sol.snapshots.len(), 1);
    assert_eq!(sol.snapshots[0], prob.initial_field().unwrap());
    assert_eq!(sol.stats.steps, 0);
}

#[test]
fn two_dimensional_runs_report_overshoot() {
    let grid = GridSpec::square_2d(0.0, 2.0 * PI, 24, Boundary::Periodic).unwrap();
    let prob = Problem::new(
        OperatorSpec::normalized(4.0).unwrap(),
        grid,
        mixed_data(),
        0.1,
    )
    .unwrap()
    .with_hamiltonian(HamiltonianSpec::zero());
    let sol = solve(&prob).unwrap();
    assert!(sol.stats.overshoot.is_finite() && sol.stats.overshoot >= 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_dimensional_solves_obey_the_maximum_principle(
        p in 1.0f64..5.0,
        periodic in any::<bool>(),
        amps in prop::array::uniform3(-1.0f64..1.0),
        horizon in 0.01f64..0.2,
    ) {
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Dirichlet };
        let grid = GridSpec::uniform_1d(0.0, 2.0 * PI, 33, boundary).unwrap();
        let data: ScalarFn = Arc::new(move |x: &[f64], _| {
            amps.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * x[0]).sin()).sum()
        });
        let prob = Problem::new(OperatorSpec::normalized(p).unwrap(), grid, data, horizon).unwrap();
        let (lo, hi) = prob.initial_field().unwrap().min_max();
        let (a, b) = solve(&prob).unwrap().final_field().min_max();
        prop_assert!(a >= lo - 1e-12 && b <= hi + 1e-12);
    }

    #[test]
    fn a_step_of_a_constant_field_changes_nothing(c in -10.0f64..10.0, p in 1.5f64..4.0) {
        let grid = GridSpec::square_2d(0.0, 1.0, 12, Boundary::Periodic).unwrap();
        let data: ScalarFn = Arc::new(move |_: &[f64], _| c);
        let prob = Problem::new(OperatorSpec::variational(p).unwrap(), grid, data, 1.0)
            .unwrap()
            .with_hamiltonian(HamiltonianSpec::zero());
        let u0 = prob.initial_field().unwrap();
        let u1 = step(&u0, &prob, 1e-4).unwrap();
        prop_assert_eq!(u1.values(), u0.values());
    }
}
