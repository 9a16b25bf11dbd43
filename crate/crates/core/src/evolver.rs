//! Forward-Euler time stepping of `∂_t u = tr(A(∇u)∇²u) − H(x, t, ∇u)`.
//!
//! Spatial derivatives are central differences. `A` takes its direction from
//! the central gradient and its magnitude from the root mean square of the
//! one-sided differences, which keeps degenerate operators active at symmetric
//! kinks where the central gradient vanishes. Near a singular gradient the
//! operator is evaluated through its grid-regularized member, and for families
//! that grow without bound the gradient fed to `A` is clamped so the explicit
//! time step stays usable.

use std::fmt;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::grid::{Boundary, GridSpec, ScalarField};
use crate::matrix::MAX_DIM;
use crate::operator::{HamiltonianSpec, OperatorSpec, RankOneForm};
use crate::ScalarFn;

/// Knobs of the explicit scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverControls {
    /// Safety factor in `(0, 1]` applied to the stability limit.
    pub cfl_sigma: f64,
    /// Cap on `|∇u|` inside `A`; `None` derives it from the data.
    pub grad_clamp: Option<f64>,
    /// Times at which the field is recorded; `T` is always recorded.
    pub snapshot_times: Vec<f64>,
    /// Regularization used at singular gradients; `None` means the grid spacing.
    pub eps_num: Option<f64>,
    /// Use this step instead of the adaptive one (must respect the stability limit).
    pub fixed_dt: Option<f64>,
    pub max_steps: usize,
    pub execution: Execution,
}

impl Default for SolverControls {
    fn default() -> Self {
        Self {
            cfl_sigma: 0.5,
            grad_clamp: None,
            snapshot_times: Vec::new(),
            eps_num: None,
            fixed_dt: None,
            max_steps: 10_000_000,
            execution: Execution::default(),
        }
    }
}

impl SolverControls {
    fn validate(&self, horizon: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.cfl_sigma > 0.0 && self.cfl_sigma <= 1.0) {
            return bad(format!(
                "cfl_sigma must lie in (0, 1], got {}",
                self.cfl_sigma
            ));
        }
        if let Some(c) = self.grad_clamp {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("grad_clamp must be positive, got {c}"));
            }
        }
        if let Some(e) = self.eps_num {
            if !(e >= 0.0 && e.is_finite()) {
                return bad(format!("eps_num must be ≥ 0, got {e}"));
            }
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("fixed_dt must be positive, got {dt}"));
            }
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        for w in self.snapshot_times.windows(2) {
            if w[0] > w[1] {
                return bad("snapshot_times must be sorted".into());
            }
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= horizon))
        {
            return bad(format!("snapshot time {t} outside [0, {horizon}]"));
        }
        Ok(())
    }
}

/// An initial-boundary value problem on a rectangle.
#[derive(Clone)]
pub struct Problem {
    spec: OperatorSpec,
    ham: HamiltonianSpec,
    grid: GridSpec,
    data: ScalarFn,
    dirichlet: Option<ScalarFn>,
    horizon: f64,
    controls: SolverControls,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("spec", &self.spec)
            .field("ham", &self.ham)
            .field("grid", &self.grid)
            .field("separate_dirichlet", &self.dirichlet.is_some())
            .field("horizon", &self.horizon)
            .field("controls", &self.controls)
            .finish()
    }
}

impl Problem {
    /// `data` is `g(x, t)`: its `t = 0` section is the initial field and, on
    /// Dirichlet grids, it also supplies the boundary values. The first-order
    /// term defaults to the one paired with the operator family.
    pub fn new(spec: OperatorSpec, grid: GridSpec, data: ScalarFn, horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "horizon must be ≥ 0, got {horizon}"
            )));
        }
        Ok(Self {
            ham: HamiltonianSpec::for_operator(&spec),
            spec,
            grid,
            data,
            dirichlet: None,
            horizon,
            controls: SolverControls::default(),
        })
    }

    pub fn with_hamiltonian(mut self, ham: HamiltonianSpec) -> Self {
        self.ham = ham;
        self
    }

    pub fn with_spec(mut self, spec: OperatorSpec) -> Self {
        self.spec = spec;
        self
    }

    /// Separate boundary data; must match the initial field on the boundary at `t = 0`.
    pub fn with_dirichlet(mut self, g: ScalarFn) -> Result<Self> {
        if self.grid.boundary() != Boundary::Dirichlet {
            return Err(Error::InvalidInput(
                "boundary data given for a periodic grid".into(),
            ));
        }
        let d = self.grid.dim();
        for node in (0..self.grid.len()).filter(|&i| self.grid.is_boundary(i)) {
            let x = self.grid.coords(node);
            let (a, b) = ((self.data)(&x[..d], 0.0), g(&x[..d], 0.0));
            if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
                return Err(Error::InvalidInput(format!(
                    "initial and boundary data disagree at node {node}: {a} vs {b}"
                )));
            }
        }
        self.dirichlet = Some(g);
        Ok(self)
    }

    pub fn with_controls(mut self, controls: SolverControls) -> Result<Self> {
        controls.validate(self.horizon)?;
        self.controls = controls;
        Ok(self)
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn hamiltonian(&self) -> &HamiltonianSpec {
        &self.ham
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn controls(&self) -> &SolverControls {
        &self.controls
    }

    pub fn controls_mut(&mut self) -> &mut SolverControls {
        &mut self.controls
    }

    pub fn data(&self) -> &ScalarFn {
        &self.data
    }

    pub fn initial_field(&self) -> Result<ScalarField> {
        ScalarField::from_fn(&self.grid, 0.0, |x| (self.data)(x, 0.0))
    }

    fn boundary_value(&self, x: &[f64], t: f64) -> f64 {
        match &self.dirichlet {
            Some(g) => g(x, t),
            None => (self.data)(x, t),
        }
    }

    fn prepare(&self) -> Result<Prepared> {
        self.controls.validate(self.horizon)?;
        let eps_num = self.controls.eps_num.unwrap_or_else(|| self.grid.h_min());
        let clamp = if self.spec.unbounded_growth() {
            match self.controls.grad_clamp {
                Some(c) => c,
                None => (2.0 * max_gradient(&self.initial_field()?)).max(1.0),
            }
        } else {
            f64::INFINITY
        };
        Ok(Prepared {
            regularized: self.spec.regularized_with(eps_num),
            clamp,
        })
    }
}

/// Per-solve constants derived from the problem.
struct Prepared {
    regularized: OperatorSpec,
    clamp: f64,
}

fn max_gradient(field: &ScalarField) -> f64 {
    let g = field.grid();
    let mut xi = [0.0; 2];
    (0..g.len())
        .filter(|&i| !g.is_boundary(i))
        .map(|i| field.gradient_and_spread(i, &mut xi))
        .fold(0.0, f64::max)
}

impl Problem {
    /// `A` at a discrete gradient, after clamping and the singular-gradient policy.
    /// `xi` is the central gradient and `mag` the magnitude fed to `A`.
    fn local_form(&self, prep: &Prepared, xi: &[f64], mag: f64) -> RankOneForm {
        let n = xi.len();
        let central = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm = mag.min(prep.clamp);
        let mut buf = [0.0; MAX_DIM];
        // a symmetric kink has no direction (the central gradient there is
        // rounding noise); average A over directions instead
        let undirected = central <= 1e-10 * mag && norm > 0.0;
        if !undirected && central > 0.0 {
            for (b, v) in buf.iter_mut().zip(xi) {
                *b = v * (norm / central);
            }
        } else {
            buf[0] = norm;
        }
        let form = self.policy_form(prep, &buf[..n], norm);
        if undirected && n > 1 {
            return RankOneForm {
                iso: form.iso + form.along / n as f64,
                along: 0.0,
                ..form
            };
        }
        form
    }

    fn policy_form(&self, prep: &Prepared, xi: &[f64], norm: f64) -> RankOneForm {
        let n = xi.len();
        if self.spec.everywhere_defined() {
            return self.spec.diffusion_form_unchecked(xi, norm);
        }
        if norm < self.spec.grad_floor() {
            return prep.regularized.diffusion_form_unchecked(xi, norm);
        }
        if norm == 0.0 {
            return self
                .spec
                .extension_at_zero(n)
                .unwrap_or_else(|| prep.regularized.diffusion_form_unchecked(xi, norm));
        }
        self.spec.diffusion_form_unchecked(xi, norm)
    }

    fn check_field(&self, field: &ScalarField) -> Result<()> {
        if field.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn cfl_dt_prepared(&self, prep: &Prepared, field: &ScalarField) -> Result<f64> {
        let g = &self.grid;
        let d = g.dim();
        let lambda = exec::max_over(self.controls.execution, g.len(), |i| {
            if g.is_boundary(i) {
                return 0.0;
            }
            let mut xi = [0.0; 2];
            let mag = field.gradient_and_spread(i, &mut xi);
            self.local_form(prep, &xi[..d], mag).eig_max()
        });
        if !lambda.is_finite() {
            return Err(Error::BlowUp {
                node: self.first_bad_node(prep, field),
                time: field.time(),
            });
        }
        let h = g.h_min();
        Ok(self.controls.cfl_sigma * h * h / (2.0 * d as f64 * lambda.max(1.0)))
    }

    fn first_bad_node(&self, prep: &Prepared, field: &ScalarField) -> usize {
        let d = self.grid.dim();
        (0..self.grid.len())
            .filter(|&i| !self.grid.is_boundary(i))
            .find(|&i| {
                let mut xi = [0.0; 2];
                let mag = field.gradient_and_spread(i, &mut xi);
                !self.local_form(prep, &xi[..d], mag).eig_max().is_finite()
            })
            .unwrap_or(0)
    }

    fn step_prepared(&self, prep: &Prepared, field: &ScalarField, dt: f64) -> Result<ScalarField> {
        let g = &self.grid;
        let d = g.dim();
        let t = field.time();
        let t_new = t + dt;
        let u = field.values();
        let mut out = vec![0.0; g.len()];
        let bad = exec::fill_max(self.controls.execution, &mut out, |i| {
            let x = g.coords(i);
            let v = if g.is_boundary(i) {
                self.boundary_value(&x[..d], t_new)
            } else {
                let mut xi = [0.0; 2];
                let mag = field.gradient_and_spread(i, &mut xi);
                let hess = field.hessian_unchecked(i);
                let a = self.local_form(prep, &xi[..d], mag);
                let mut rate = a.contract(&hess);
                if !self.ham.is_zero() {
                    rate -= self.ham.eval(&x[..d], t, &xi[..d]);
                }
                u[i] + dt * rate
            };
            (v, if v.is_finite() { 0.0 } else { 1.0 })
        });
        if bad > 0.0 {
            let node = out.iter().position(|v| !v.is_finite()).unwrap_or(0);
            return Err(Error::BlowUp { node, time: t_new });
        }
        Ok(ScalarField::from_parts_unchecked(g.clone(), out, t_new))
    }
}

/// Largest stable forward-Euler step for `field`.
pub fn cfl_dt(problem: &Problem, field: &ScalarField) -> Result<f64> {
    problem.check_field(field)?;
    let prep = problem.prepare()?;
    problem.cfl_dt_prepared(&prep, field)
}

/// One forward-Euler step of size `dt`.
pub fn step(field: &ScalarField, problem: &Problem, dt: f64) -> Result<ScalarField> {
    problem.check_field(field)?;
    let prep = problem.prepare()?;
    let limit = problem.cfl_dt_prepared(&prep, field)?;
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, limit });
    }
    problem.step_prepared(&prep, field, dt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub steps: usize,
    /// Smallest step taken, not counting steps shortened to land on a snapshot.
    pub min_dt: f64,
    pub max_dt: f64,
    /// Largest amount by which the solution left the range of its data.
    pub overshoot: f64,
    pub grad_clamp: f64,
    pub eps_num: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub snapshots: Vec<ScalarField>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn final_field(&self) -> &ScalarField {
        self.snapshots
            .last()
            .expect("a solution always holds the final field")
    }

    pub fn at(&self, time: f64) -> Option<&ScalarField> {
        self.snapshots.iter().find(|s| s.time() == time)
    }
}

/// Integrate from `t = 0` to the horizon, recording the requested snapshots.
pub fn solve(problem: &Problem) -> Result<Solution> {
    let prep = problem.prepare()?;
    let c = &problem.controls;
    let horizon = problem.horizon;
    let mut targets: Vec<f64> = c.snapshot_times.clone();
    if targets.last() != Some(&horizon) {
        targets.push(horizon);
    }
    targets.dedup();

    let mut field = problem.initial_field()?;
    let (mut data_lo, mut data_hi) = field.min_max();
    let boundary_nodes: Vec<usize> = (0..problem.grid.len())
        .filter(|&i| problem.grid.is_boundary(i))
        .collect();
    let mut overshoot: f64 = 0.0;

    let mut snapshots = Vec::with_capacity(targets.len());
    let mut next = 0;
    while next < targets.len() && targets[next] <= 0.0 {
        snapshots.push(field.clone());
        next += 1;
    }

    let mut stats = SolveStats {
        steps: 0,
        min_dt: f64::INFINITY,
        max_dt: 0.0,
        overshoot: 0.0,
        grad_clamp: prep.clamp,
        eps_num: c.eps_num.unwrap_or_else(|| problem.grid.h_min()),
    };
    let mut t = 0.0;
    while next < targets.len() {
        if stats.steps >= c.max_steps {
            return Err(Error::BudgetExceeded(c.max_steps));
        }
        let target = targets[next];
        let limit = problem.cfl_dt_prepared(&prep, &field)?;
        let dt = match c.fixed_dt {
            Some(dt) if dt > limit * (1.0 + 1e-12) => {
                return Err(Error::CflViolation { dt, limit })
            }
            Some(dt) => dt,
            None => limit,
        };
        let landing = t + dt * (1.0 + 1e-9) >= target;
        let dt_taken = if landing { target - t } else { dt };
        if !landing {
            stats.min_dt = stats.min_dt.min(dt);
        }
        stats.max_dt = stats.max_dt.max(dt_taken);
        field = problem.step_prepared(&prep, &field, dt_taken)?;
        stats.steps += 1;
        t = if landing { target } else { t + dt_taken };
        if landing {
            field = ScalarField::from_parts_unchecked(problem.grid.clone(), field.into_values(), t);
        }

        for &i in &boundary_nodes {
            let v = field.values()[i];
            data_lo = data_lo.min(v);
            data_hi = data_hi.max(v);
        }
        let (lo, hi) = field.min_max();
        overshoot = overshoot.max(hi - data_hi).max(data_lo - lo);

        while next < targets.len() && targets[next] <= t {
            snapshots.push(field.clone());
            next += 1;
        }
    }
    if stats.min_dt.is_infinite() {
        stats.min_dt = stats.max_dt;
    }
    stats.overshoot = overshoot;
    Ok(Solution { snapshots, stats })
}

/// Snapshot file name `<run-id>_t<time>.csv`.
pub fn snapshot_file_name(run_id: &str, time: f64) -> String {
    format!("{run_id}_t{}.csv", crate::grid::format_f64(time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn line(h: f64, n: usize) -> GridSpec {
        GridSpec::uniform_1d(0.0, h * n as f64, n, Boundary::Periodic).unwrap()
    }

    fn sine() -> ScalarFn {
        Arc::new(|x: &[f64], _| x[0].sin())
    }

    #[test]
    fn cfl_examples() {
        let g = line(0.1, 20);
        let f = ScalarField::from_fn(&g, 0.0, |x| (x[0] * PI).sin()).unwrap();
        let prob = Problem::new(
            OperatorSpec::normalized(3.0).unwrap(),
            g.clone(),
            sine(),
            1.0,
        )
        .unwrap();
        assert_relative_eq!(cfl_dt(&prob, &f).unwrap(), 1.25e-3, epsilon = 1e-15);
        let prob = prob.with_spec(OperatorSpec::variational(2.0).unwrap());
        assert_relative_eq!(cfl_dt(&prob, &f).unwrap(), 2.5e-3, epsilon = 1e-15);
    }

    #[test]
    fn cfl_uses_clamped_gradient() {
        let g = line(0.1, 20);
        // slope 5 everywhere except where the periodic wrap breaks it
        let f = ScalarField::from_fn(&g, 0.0, |x| 5.0 * x[0]).unwrap();
        let prob = Problem::new(OperatorSpec::variational(4.0).unwrap(), g, sine(), 1.0)
            .unwrap()
            .with_controls(SolverControls {
                grad_clamp: Some(2.0),
                ..SolverControls::default()
            })
            .unwrap();
        assert_relative_eq!(
            cfl_dt(&prob, &f).unwrap(),
            0.5 * 0.01 / (2.0 * 12.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn constant_field_is_stationary() {
        let g = GridSpec::square_2d(0.0, 1.0, 12, Boundary::Periodic).unwrap();
        let data: ScalarFn = Arc::new(|_, _| 1.5);
        for spec in [
            OperatorSpec::normalized(3.0).unwrap(),
            OperatorSpec::variational(1.5).unwrap(),
            OperatorSpec::biased_infinity(0.0).unwrap(),
        ] {
            let prob = Problem::new(spec, g.clone(), data.clone(), 0.1).unwrap();
            let f = prob.initial_field().unwrap();
            let dt = cfl_dt(&prob, &f).unwrap();
            assert_eq!(step(&f, &prob, dt).unwrap().values(), f.values());
            let sol = solve(&prob).unwrap();
            assert!(sol.final_field().values().iter().all(|&v| v == 1.5));
        }
    }

    #[test]
    fn one_step_of_sine() {
        let g = GridSpec::uniform_1d(0.0, 2.0 * PI, 128, Boundary::Periodic).unwrap();
        let prob = Problem::new(OperatorSpec::normalized(3.0).unwrap(), g, sine(), 1.0).unwrap();
        let f = prob.initial_field().unwrap();
        let dt = cfl_dt(&prob, &f).unwrap();
        let next = step(&f, &prob, dt).unwrap();
        assert_eq!(next.time(), dt);
        let h = prob.grid().spacing(0);
        for i in 0..128 {
            let x = prob.grid().coords(i)[0];
            let expect = x.sin() - 2.0 * dt * x.sin();
            assert!((next.values()[i] - expect).abs() <= dt * h * h);
        }
    }

    #[test]
    fn rejects_oversized_step() {
        let g = line(0.1, 20);
        let prob = Problem::new(OperatorSpec::normalized(3.0).unwrap(), g, sine(), 1.0).unwrap();
        let f = prob.initial_field().unwrap();
        let limit = cfl_dt(&prob, &f).unwrap();
        assert!(matches!(
            step(&f, &prob, 2.0 * limit),
            Err(Error::CflViolation { .. })
        ));
    }

    #[test]
    fn dirichlet_nodes_follow_data() {
        let g = GridSpec::uniform_1d(0.0, 1.0, 11, Boundary::Dirichlet).unwrap();
        let data: ScalarFn = Arc::new(|x: &[f64], t| x[0] + t);
        let prob = Problem::new(OperatorSpec::normalized(3.0).unwrap(), g, data, 1.0).unwrap();
        let f = prob.initial_field().unwrap();
        let dt = cfl_dt(&prob, &f).unwrap();
        let next = step(&f, &prob, dt).unwrap();
        assert_eq!(next.values()[0], dt);
        assert_eq!(next.values()[10], 1.0 + dt);
    }

    #[test]
    fn incompatible_boundary_data_rejected() {
        let g = GridSpec::uniform_1d(0.0, 1.0, 11, Boundary::Dirichlet).unwrap();
        let prob = Problem::new(OperatorSpec::normalized(3.0).unwrap(), g, sine(), 1.0).unwrap();
        assert!(prob.clone().with_dirichlet(Arc::new(|_, _| 7.0)).is_err());
        assert!(prob
            .with_dirichlet(Arc::new(|x: &[f64], t| x[0].sin() + t))
            .is_ok());
    }

    #[test]
    fn snapshots_land_exactly() {
        let g = GridSpec::uniform_1d(0.0, 2.0 * PI, 32, Boundary::Periodic).unwrap();
        let prob = Problem::new(OperatorSpec::normalized(3.0).unwrap(), g, sine(), 0.3)
            .unwrap()
            .with_controls(SolverControls {
                snapshot_times: vec![0.0, 0.1, 0.2],
                ..SolverControls::default()
            })
            .unwrap();
        let sol = solve(&prob).unwrap();
        let times: Vec<f64> = sol.snapshots.iter().map(|s| s.time()).collect();
        assert_eq!(times, vec![0.0, 0.1, 0.2, 0.3]);
        assert!(sol.stats.steps > 0 && sol.stats.min_dt > 0.0);
    }

    #[test]
    fn zero_horizon_returns_initial_data() {
        let g = GridSpec::uniform_1d(0.0, 2.0 * PI, 32, Boundary::Periodic).unwrap();
        let prob = Problem::new(OperatorSpec::normalized(3.0).unwrap(), g, sine(), 0.0).unwrap();
        let sol = solve(&prob).unwrap();
        assert_eq!(sol.snapshots.len(), 1);
        assert_eq!(sol.final_field(), &prob.initial_field().unwrap());
        assert_eq!(sol.stats.steps, 0);
    }

    #[test]
    fn step_budget_enforced() {
        let g = GridSpec::uniform_1d(0.0, 2.0 * PI, 32, Boundary::Periodic).unwrap();
        let prob = Problem::new(OperatorSpec::normalized(3.0).unwrap(), g, sine(), 1.0)
            .unwrap()
            .with_controls(SolverControls {
                max_steps: 3,
                ..SolverControls::default()
            })
            .unwrap();
        assert_eq!(solve(&prob).unwrap_err(), Error::BudgetExceeded(3));
    }

    #[test]
    fn invalid_controls_rejected() {
        let g = GridSpec::uniform_1d(0.0, 1.0, 16, Boundary::Periodic).unwrap();
        let prob = Problem::new(OperatorSpec::normalized(3.0).unwrap(), g, sine(), 1.0).unwrap();
        for c in [
            SolverControls {
                cfl_sigma: 0.0,
                ..Default::default()
            },
            SolverControls {
                cfl_sigma: 1.5,
                ..Default::default()
            },
            SolverControls {
                snapshot_times: vec![0.5, 0.2],
                ..Default::default()
            },
            SolverControls {
                snapshot_times: vec![2.0],
                ..Default::default()
            },
            SolverControls {
                grad_clamp: Some(-1.0),
                ..Default::default()
            },
        ] {
            assert!(prob.clone().with_controls(c).is_err());
        }
    }

    #[test]
    fn snapshot_names() {
        assert_eq!(
            snapshot_file_name("run", 0.5),
            "run_t5.0000000000000000e-1.csv"
        );
    }
}
