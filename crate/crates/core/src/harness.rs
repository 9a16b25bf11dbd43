//! Perturbation sweeps, log-log rate fits, Hölder estimates and the
//! comparison of measured exponents with predicted ones.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::evolver::{cfl_dt, solve, Problem, Solution};
use crate::exact::{sup_diff_closed_form, DomainSampler, ExactSolution};
use crate::exec::{self, Execution};
use crate::grid::{format_f64, sup_diff, ScalarField};
use crate::operator::{family_rate, FamilyCase, PerturbAxis, RateParams};

/// Gaps below this multiple of the discretization-error floor are excluded.
pub const FLOOR_FACTOR: f64 = 10.0;

pub const MIN_PERTURBATIONS: usize = 4;

/// Theory to compare a sweep against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryRef {
    pub case: FamilyCase,
    pub params: RateParams,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    base: Problem,
    axis: PerturbAxis,
    values: Vec<f64>,
    pub shared_dt: bool,
    gap_times: Vec<f64>,
    pub theory: Option<TheoryRef>,
    /// Measure the discretization-error floor with one refinement of the base.
    pub measure_floor: bool,
    /// Closed-form base solution; perturbed members follow the `P` axis.
    pub oracle: Option<ExactSolution>,
    /// Run the solves of a sweep concurrently.
    pub execution: Execution,
}

impl SweepPlan {
    pub fn new(
        base: Problem,
        axis: PerturbAxis,
        values: Vec<f64>,
        gap_times: Vec<f64>,
    ) -> Result<Self> {
        if values.len() < MIN_PERTURBATIONS {
            return Err(Error::InvalidInput(format!(
                "need ≥ {MIN_PERTURBATIONS} perturbations, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput("perturbations must be positive".into()));
        }
        if values.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::InvalidInput(
                "perturbations must be strictly decreasing".into(),
            ));
        }
        let horizon = base.horizon();
        let gap_times = if gap_times.is_empty() {
            vec![horizon]
        } else {
            gap_times
        };
        if gap_times.windows(2).any(|w| w[0] > w[1])
            || gap_times.iter().any(|t| !(*t >= 0.0 && *t <= horizon))
        {
            return Err(Error::InvalidInput(format!(
                "gap times must be sorted within [0, {horizon}]"
            )));
        }
        for &v in &values {
            base.spec().perturbed(axis, v)?;
        }
        Ok(Self {
            base,
            axis,
            values,
            shared_dt: true,
            gap_times,
            theory: None,
            measure_floor: true,
            oracle: None,
            execution: Execution::default(),
        })
    }

    pub fn base(&self) -> &Problem {
        &self.base
    }

    pub fn axis(&self) -> PerturbAxis {
        self.axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gap_times(&self) -> &[f64] {
        &self.gap_times
    }

    fn with_snapshots(&self, mut problem: Problem, fixed_dt: Option<f64>) -> Problem {
        let c = problem.controls_mut();
        c.snapshot_times = self.gap_times.clone();
        c.fixed_dt = fixed_dt;
        problem
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Number of pairs that entered the fit.
    pub used: usize,
}

/// Ordinary least squares of `log gap` on `log eps`; zero gaps are dropped.
pub fn fit_loglog(pairs: &[(f64, f64)]) -> Result<LogLogFit> {
    if let Some((e, g)) = pairs
        .iter()
        .find(|(e, g)| !(e.is_finite() && *e > 0.0 && g.is_finite() && *g >= 0.0))
    {
        return Err(Error::InvalidInput(format!("bad fit pair ({e}, {g})")));
    }
    let kept: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(_, g)| *g > 0.0)
        .map(|(e, g)| (e.ln(), g.ln()))
        .collect();
    if kept.len() < pairs.len() {
        log::warn!(
            "dropped {} zero gap(s) from the fit",
            pairs.len() - kept.len()
        );
    }
    if kept.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need ≥ 3 positive gaps to fit, got {}",
            kept.len()
        )));
    }
    let n = kept.len() as f64;
    let mx = kept.iter().map(|p| p.0).sum::<f64>() / n;
    let my = kept.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = kept.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = kept.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = kept.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::InvalidInput("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = kept
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(LogLogFit {
        slope,
        intercept,
        r_squared,
        used: kept.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderEstimate {
    pub theta_hat: f64,
    pub l_hat: f64,
}

/// Upper-envelope Hölder fit: for log-spaced lags up to a quarter of the grid,
/// take the largest oscillation over node pairs at that lag along each axis and
/// fit `log osc` against `log distance`. At most `pair_count` pairs are
/// examined per lag and axis, taken at evenly strided start nodes. Periodic
/// fields are treated as periodic.
pub fn estimate_holder(field: &ScalarField, pair_count: usize) -> Result<HolderEstimate> {
    if pair_count < 100 {
        return Err(Error::InvalidInput(format!(
            "pair_count must be ≥ 100, got {pair_count}"
        )));
    }
    let g = field.grid();
    let u = field.values();
    let mut points = Vec::new();
    for axis in 0..g.dim() {
        let n = g.resolution()[axis];
        let max_lag = (n / 4).max(1);
        let mut lags: Vec<usize> = (0..)
            .map(|m| 2f64.powf(m as f64 / 2.0).round() as usize)
            .take_while(|&k| k <= max_lag)
            .collect();
        lags.dedup();
        let stride = g.len().div_ceil(pair_count).max(1);
        for k in lags {
            let osc = (0..g.len())
                .step_by(stride)
                .filter_map(|i| g.neighbor(i, axis, k as isize).map(|j| (u[j] - u[i]).abs()))
                .fold(0.0, f64::max);
            points.push((k as f64 * g.spacing(axis), osc));
        }
    }
    if points.iter().all(|p| p.1 == 0.0) {
        return Err(Error::Flat);
    }
    let fit = fit_loglog(&points)?;
    Ok(HolderEstimate {
        theta_hat: fit.slope.clamp(1e-12, 1.0),
        l_hat: fit.intercept.exp(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub eps_list: Vec<f64>,
    pub gap_list: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub theory_nu: Option<f64>,
    pub theory_attained: Option<bool>,
    pub holder_theta: Option<f64>,
}

impl RateFit {
    /// Fit `gap ~ eps^ν` over the given pairs.
    pub fn from_pairs(eps_list: Vec<f64>, gap_list: Vec<f64>) -> Result<Self> {
        if eps_list.len() != gap_list.len() {
            return Err(Error::DimensionMismatch {
                expected: eps_list.len(),
                got: gap_list.len(),
            });
        }
        let pairs: Vec<(f64, f64)> = eps_list
            .iter()
            .copied()
            .zip(gap_list.iter().copied())
            .collect();
        let fit = fit_loglog(&pairs)?;
        Ok(Self {
            eps_list,
            gap_list,
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            theory_nu: None,
            theory_attained: None,
            holder_theta: None,
        })
    }

    pub fn with_theory(mut self, nu: f64, attained: bool) -> Self {
        self.theory_nu = Some(nu);
        self.theory_attained = Some(attained);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub consistent: bool,
    pub detail: String,
}

/// Attained rates need `|slope − ν| ≤ margin`; open suprema only bound the slope below.
pub fn compare_theory(fit: &RateFit, margin: f64) -> Result<Verdict> {
    let nu = fit.theory_nu.ok_or(Error::MissingTheory)?;
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "margin must be positive, got {margin}"
        )));
    }
    let attained = fit.theory_attained.unwrap_or(true);
    let (consistent, detail) = if attained {
        let dev = (fit.slope - nu).abs();
        (
            dev <= margin,
            format!(
                "slope {:.4} vs attained rate {nu:.4}: deviation {dev:.4}, margin {margin}",
                fit.slope
            ),
        )
    } else {
        (
            fit.slope >= nu - margin,
            format!(
                "slope {:.4} vs open supremum {nu:.4}: need ≥ {:.4}",
                fit.slope,
                nu - margin
            ),
        )
    };
    Ok(Verdict { consistent, detail })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub gap: f64,
    pub excluded: bool,
    pub oracle_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub fit: RateFit,
    pub verdict: Option<Verdict>,
    /// Max distance between base solutions on the grid and its refinement.
    pub error_floor: Option<f64>,
    /// Shared step, when one was used.
    pub dt: Option<f64>,
}

impl SweepReport {
    /// Largest `|solver gap − oracle gap|` over non-excluded rows.
    pub fn oracle_disagreement(&self) -> Option<f64> {
        let diffs: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| !r.excluded)
            .filter_map(|r| r.oracle_gap.map(|o| (r.gap - o).abs()))
            .collect();
        (!diffs.is_empty()).then(|| diffs.into_iter().fold(0.0, f64::max))
    }

    /// `eps,gap,excluded` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,gap,excluded\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{}",
                format_f64(r.eps),
                format_f64(r.gap),
                r.excluded
            );
        }
        out
    }

    /// Fit summary as a flat JSON object.
    pub fn summary_json(&self) -> String {
        let num = |v: Option<f64>| v.map_or("null".to_string(), format_f64);
        let fields = [
            ("slope", format_f64(self.fit.slope)),
            ("intercept", format_f64(self.fit.intercept)),
            ("r_squared", format_f64(self.fit.r_squared)),
            ("theory_nu", num(self.fit.theory_nu)),
            (
                "theory_attained",
                self.fit
                    .theory_attained
                    .map_or("null".into(), |b| b.to_string()),
            ),
            (
                "consistent",
                self.verdict
                    .as_ref()
                    .map_or("null".into(), |v| v.consistent.to_string()),
            ),
            ("error_floor", num(self.error_floor)),
            ("holder_theta", num(self.fit.holder_theta)),
            ("oracle_disagreement", num(self.oracle_disagreement())),
            ("dt", num(self.dt)),
            (
                "detail",
                self.verdict
                    .as_ref()
                    .map_or("null".into(), |v| format!("{:?}", v.detail)),
            ),
        ];
        let body: Vec<String> = fields
            .iter()
            .map(|(k, v)| format!("  \"{k}\": {v}"))
            .collect();
        format!("{{\n{}\n}}\n", body.join(",\n"))
    }
}

fn max_gap(a: &Solution, b: &Solution, times: &[f64]) -> Result<f64> {
    let mut gap: f64 = 0.0;
    for &t in times {
        let (fa, fb) = match (a.at(t), b.at(t)) {
            (Some(fa), Some(fb)) => (fa, fb),
            _ => return Err(Error::InvalidInput(format!("missing snapshot at t = {t}"))),
        };
        gap = gap.max(sup_diff(fa, fb)?);
    }
    Ok(gap)
}

fn floor_gap(coarse: &Solution, fine: &Solution, times: &[f64]) -> Result<f64> {
    let mut floor: f64 = 0.0;
    for &t in times {
        let (fc, ff) = match (coarse.at(t), fine.at(t)) {
            (Some(fc), Some(ff)) => (fc, ff),
            _ => return Err(Error::InvalidInput(format!("missing snapshot at t = {t}"))),
        };
        let g = fc.grid();
        for i in 0..g.len() {
            let j = g.node_on_refined(i, ff.grid());
            floor = floor.max((fc.values()[i] - ff.values()[j]).abs());
        }
    }
    Ok(floor)
}

enum Job {
    Base,
    Perturbed(usize),
    Refined,
}

/// Solve the base and every perturbed problem, measure gaps and fit the rate.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepReport> {
    let base = &plan.base;
    let perturbed: Vec<Problem> = plan
        .values
        .iter()
        .map(|&v| Ok(base.clone().with_spec(base.spec().perturbed(plan.axis, v)?)))
        .collect::<Result<_>>()?;

    let dt = if plan.shared_dt {
        let mut dt = f64::INFINITY;
        for prob in std::iter::once(base).chain(&perturbed) {
            dt = dt.min(cfl_dt(prob, &prob.initial_field()?)?);
        }
        Some(dt)
    } else {
        None
    };

    let mut problems = vec![plan.with_snapshots(base.clone(), dt)];
    problems.extend(perturbed.into_iter().map(|p| plan.with_snapshots(p, dt)));
    let mut jobs: Vec<Job> = vec![Job::Base];
    jobs.extend((0..plan.values.len()).map(Job::Perturbed));
    if plan.measure_floor {
        let fine_grid = base.grid().refined()?;
        let mut fine = Problem::new(*base.spec(), fine_grid, base.data().clone(), base.horizon())?
            .with_hamiltonian(base.hamiltonian().clone());
        *fine.controls_mut() = base.controls().clone();
        problems.push(plan.with_snapshots(fine, dt.map(|d| d / 4.0)));
        jobs.push(Job::Refined);
    }

    let results = exec::map_jobs(plan.execution, &jobs, |job| match job {
        Job::Base => solve(&problems[0]),
        Job::Perturbed(k) => solve(&problems[1 + k]),
        Job::Refined => solve(problems.last().expect("refined job")),
    });
    let mut results = results.into_iter();
    let base_sol = results.next().expect("base job")?;
    let mut solutions = Vec::with_capacity(plan.values.len());
    for (k, r) in results.by_ref().take(plan.values.len()).enumerate() {
        solutions.push(r.map_err(|e| Error::SweepFailed {
            value: plan.values[k],
            source: Box::new(e),
        })?);
    }
    let error_floor = match results.next() {
        Some(fine) => Some(floor_gap(&base_sol, &fine?, &plan.gap_times)?),
        None => None,
    };

    let oracle_gaps: Option<Vec<f64>> = match &plan.oracle {
        Some(sol) if plan.axis == PerturbAxis::P => {
            let g = base.grid();
            let d = g.dim();
            let pts = (0..g.len()).map(|i| g.coords(i)[..d].to_vec()).collect();
            let sampler = DomainSampler::from_points(pts, plan.gap_times.clone());
            let gaps = plan
                .values
                .iter()
                .map(|&v| sup_diff_closed_form(sol, &sol.with_p(sol.p() + v)?, &sampler))
                .collect::<Result<_>>()?;
            Some(gaps)
        }
        Some(_) => {
            return Err(Error::InvalidInput(
                "oracle gaps need the P perturbation axis".into(),
            ))
        }
        None => None,
    };

    let mut rows = Vec::with_capacity(plan.values.len());
    for (k, sol) in solutions.iter().enumerate() {
        let gap = max_gap(sol, &base_sol, &plan.gap_times)?;
        let excluded = error_floor.is_some_and(|f| gap < FLOOR_FACTOR * f);
        if excluded {
            log::info!(
                "gap {gap:e} at eps {} is below the error floor; excluded",
                plan.values[k]
            );
        }
        rows.push(SweepRow {
            eps: plan.values[k],
            gap,
            excluded,
            oracle_gap: oracle_gaps.as_ref().map(|o| o[k]),
        });
    }

    let (eps, gaps): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| !r.excluded)
        .map(|r| (r.eps, r.gap))
        .unzip();
    if let Some(floor) = error_floor {
        let kept = gaps.iter().filter(|g| **g > 0.0).count();
        if kept < 3 {
            return Err(Error::BelowFloor {
                kept,
                factor: FLOOR_FACTOR,
                floor,
            });
        }
    }
    let mut fit = RateFit::from_pairs(eps, gaps)?;
    fit.holder_theta = estimate_holder(base_sol.final_field(), 10_000)
        .ok()
        .map(|h| h.theta_hat);
    let verdict = match &plan.theory {
        Some(th) => {
            let pred = family_rate(th.case, &th.params)?;
            fit = fit.with_theory(pred.nu_sup, pred.attained);
            Some(compare_theory(&fit, th.margin)?)
        }
        None => None,
    };
    Ok(SweepReport {
        rows,
        fit,
        verdict,
        error_floor,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, GridSpec};
    use approx::assert_relative_eq;

    #[test]
    fn exact_power_laws() {
        let f = fit_loglog(&[(1.0, 1.0), (0.5, 0.5), (0.25, 0.25)]).unwrap();
        assert_relative_eq!(f.slope, 1.0, epsilon = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        let pairs: Vec<(f64, f64)> = [1.0, 0.1, 0.01, 0.001]
            .iter()
            .map(|&e: &f64| (e, 3.0 * e.sqrt()))
            .collect();
        let f = fit_loglog(&pairs).unwrap();
        assert_relative_eq!(f.slope, 0.5, epsilon = 1e-12);
        assert_relative_eq!(f.intercept, 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(fit_loglog(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (0.5, 0.0), (0.25, 0.25)]).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (-0.5, 0.5), (0.25, 0.25)]).is_err());
        let f = fit_loglog(&[(1.0, 1.0), (0.5, 0.0), (0.25, 0.25), (0.125, 0.125)]).unwrap();
        assert_eq!(f.used, 3);
    }

    #[test]
    fn verdicts() {
        let fit = |slope, attained| {
            RateFit {
                eps_list: vec![],
                gap_list: vec![],
                slope,
                intercept: 0.0,
                r_squared: 1.0,
                theory_nu: None,
                theory_attained: None,
                holder_theta: None,
            }
            .with_theory(if attained { 1.0 } else { 0.5 }, attained)
        };
        assert!(compare_theory(&fit(0.98, true), 0.1).unwrap().consistent);
        assert!(compare_theory(&fit(1.3, false), 0.1).unwrap().consistent);
        assert!(!compare_theory(&fit(0.2, true), 0.1).unwrap().consistent);
        let mut bare = fit(1.0, true);
        bare.theory_nu = None;
        assert_eq!(
            compare_theory(&bare, 0.1).unwrap_err(),
            Error::MissingTheory
        );
    }

    #[test]
    fn holder_examples() {
        let g = GridSpec::uniform_1d(-1.0, 1.0, 1024, Boundary::Periodic).unwrap();
        let f = ScalarField::from_fn(&g, 0.0, |x| x[0].abs().sqrt()).unwrap();
        let h = estimate_holder(&f, 4096).unwrap();
        assert!((h.theta_hat - 0.5).abs() < 0.05, "{h:?}");
        let g = GridSpec::uniform_1d(0.0, 1.0, 256, Boundary::Dirichlet).unwrap();
        let f = ScalarField::from_fn(&g, 0.0, |x| 2.0 * x[0] + 1.0).unwrap();
        let h = estimate_holder(&f, 1000).unwrap();
        assert_relative_eq!(h.theta_hat, 1.0, epsilon = 1e-9);
        assert_relative_eq!(h.l_hat, 2.0, epsilon = 1e-9);
        let c = ScalarField::from_fn(&g, 0.0, |_| 4.0).unwrap();
        assert_eq!(estimate_holder(&c, 1000).unwrap_err(), Error::Flat);
        assert!(estimate_holder(&f, 10).is_err());
    }

    #[test]
    fn plan_validation() {
        let g = GridSpec::uniform_1d(0.0, 1.0, 16, Boundary::Periodic).unwrap();
        let base = Problem::new(
            crate::operator::OperatorSpec::normalized(3.0).unwrap(),
            g,
            std::sync::Arc::new(|x: &[f64], _| x[0].sin()),
            0.1,
        )
        .unwrap();
        let ok = |v: Vec<f64>| SweepPlan::new(base.clone(), PerturbAxis::P, v, vec![]).is_ok();
        assert!(ok(vec![0.4, 0.3, 0.2, 0.1]));
        assert!(!ok(vec![0.1, 0.1, 0.1, 0.1]));
        assert!(!ok(vec![0.2, 0.1]));
        assert!(!ok(vec![0.4, 0.3, 0.2, -0.1]));
        assert!(SweepPlan::new(base, PerturbAxis::Eps, vec![0.4, 0.3, 0.2, 0.1], vec![]).is_err());
    }
}
