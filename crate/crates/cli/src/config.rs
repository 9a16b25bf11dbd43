//! Experiment configuration files: JSON with a versioned schema.
//!
//! Everything is validated into library values before any computation runs.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use plap_core::evolver::{Problem, SolverControls};
use plap_core::exact::{ExactKind, ExactSolution};
use plap_core::harness::{SweepPlan, TheoryRef};
use plap_core::operator::{
    C1Params, Family, FamilyCase, HamiltonianSpec, OperatorParams, OperatorSpec, PerturbAxis,
    RateParams, XiGrid,
};
use plap_core::{Boundary, Execution, GridSpec, ScalarFn};
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

fn lib_err(e: plap_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Read and parse a JSON document, checking its schema version.
pub fn read<T: for<'de> Deserialize<'de> + Versioned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let doc: T =
        serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    if doc.schema_version() != SCHEMA_VERSION {
        return Err(config_err(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            doc.schema_version()
        )));
    }
    Ok(doc)
}

pub trait Versioned {
    fn schema_version(&self) -> u32;
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub family: String,
    pub p: Option<f64>,
    pub p_prime: Option<f64>,
    pub eps: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub a: Option<f64>,
    pub grad_floor: Option<f64>,
}

impl OperatorConfig {
    pub fn build(&self) -> Result<OperatorSpec, CliError> {
        let family = Family::from_name(&self.family).ok_or_else(|| {
            let names: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
            config_err(format!(
                "unknown family {:?}; expected one of {}",
                self.family,
                names.join(", ")
            ))
        })?;
        let d = OperatorParams::default();
        let p = self.p.unwrap_or(d.p);
        let p_prime = match (family, self.p_prime) {
            (Family::Variational, Some(pp)) if pp != p => {
                return Err(config_err("variational family takes p_prime = p"))
            }
            (Family::Variational, _) => p,
            (_, v) => v.unwrap_or(d.p_prime),
        };
        let params = OperatorParams {
            p,
            p_prime,
            eps: self.eps.unwrap_or(d.eps),
            eps1: self.eps1.unwrap_or(d.eps1),
            eps2: self.eps2.unwrap_or(d.eps2),
            a: self.a.unwrap_or(d.a),
            grad_floor: self.grad_floor.unwrap_or(d.grad_floor),
        };
        OperatorSpec::new(family, params).map_err(lib_err)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub extent: Vec<[f64; 2]>,
    pub resolution: Vec<usize>,
    pub boundary: String,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec, CliError> {
        let boundary = Boundary::from_name(&self.boundary)
            .ok_or_else(|| config_err(format!("unknown boundary {:?}", self.boundary)))?;
        let extent = self.extent.iter().map(|e| (e[0], e[1])).collect();
        GridSpec::new(extent, self.resolution.clone(), boundary).map_err(lib_err)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactConfig {
    pub kind: String,
    pub p: f64,
    #[serde(default = "one_usize")]
    pub n: usize,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub c: f64,
}

pub fn parse_exact_kind(name: &str) -> Result<ExactKind, CliError> {
    ExactKind::from_name(name).ok_or_else(|| {
        let names: Vec<&str> = ExactKind::ALL.iter().map(|k| k.name()).collect();
        config_err(format!(
            "unknown solution {name:?}; expected one of {}",
            names.join(", ")
        ))
    })
}

impl ExactConfig {
    pub fn build(&self) -> Result<ExactSolution, CliError> {
        ExactSolution::new(
            parse_exact_kind(&self.kind)?,
            self.p,
            self.n,
            self.a,
            self.c,
        )
        .map_err(lib_err)
    }
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_wavenumbers() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineTerm {
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "default_wavenumbers")]
    pub wavenumbers: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

impl SineTerm {
    fn eval(&self, x: &[f64]) -> f64 {
        let arg: f64 = self.wavenumbers.iter().zip(x).map(|(k, v)| k * v).sum();
        self.amplitude * (arg + self.phase).sin()
    }
}

/// Initial (and Dirichlet) data `g(x, t)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// `value`
    Constant { value: f64 },
    /// `amplitude · sin(k·x + phase)`
    Sine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "default_wavenumbers")]
        wavenumbers: Vec<f64>,
        #[serde(default)]
        phase: f64,
    },
    /// `offset + Σ amplitude · sin(k·x + phase)`
    Fourier {
        #[serde(default)]
        offset: f64,
        terms: Vec<SineTerm>,
    },
    /// `offset + slope·x`
    Affine {
        slope: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// `u(x, t + offset)` for a closed-form solution `u`.
    Exact {
        solution: ExactConfig,
        #[serde(default)]
        offset: f64,
    },
}

impl DataSpec {
    pub fn build(&self, dim: usize) -> Result<ScalarFn, CliError> {
        // missing trailing entries count as zero
        let check_len = |what: &str, len: usize| {
            if (1..=dim).contains(&len) {
                Ok(())
            } else {
                Err(config_err(format!(
                    "{what} needs 1..={dim} entries, got {len}"
                )))
            }
        };
        Ok(match self.clone() {
            DataSpec::Constant { value } => Arc::new(move |_: &[f64], _| value),
            DataSpec::Sine {
                amplitude,
                wavenumbers,
                phase,
            } => {
                check_len("wavenumbers", wavenumbers.len())?;
                let term = SineTerm {
                    amplitude,
                    wavenumbers,
                    phase,
                };
                Arc::new(move |x: &[f64], _| term.eval(x))
            }
            DataSpec::Fourier { offset, terms } => {
                for t in &terms {
                    check_len("wavenumbers", t.wavenumbers.len())?;
                }
                Arc::new(move |x: &[f64], _| offset + terms.iter().map(|t| t.eval(x)).sum::<f64>())
            }
            DataSpec::Affine { slope, offset } => {
                check_len("slope", slope.len())?;
                Arc::new(move |x: &[f64], _| {
                    offset + slope.iter().zip(x).map(|(s, v)| s * v).sum::<f64>()
                })
            }
            DataSpec::Exact { solution, offset } => {
                let sol = solution.build()?;
                if sol.kind() != ExactKind::HeatMode && sol.dim() != dim {
                    return Err(config_err(format!(
                        "exact solution has dimension {}, grid has {dim}",
                        sol.dim()
                    )));
                }
                if !(offset >= 0.0 && offset.is_finite()) {
                    return Err(config_err(format!("time offset must be ≥ 0, got {offset}")));
                }
                sol.as_data(offset)
            }
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianConfig {
    /// The first-order term paired with the operator family.
    #[default]
    Default,
    Zero,
    Biased {
        a: f64,
        eps2: f64,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionName {
    Sequential,
    #[default]
    Parallel,
}

impl From<ExecutionName> for Execution {
    fn from(e: ExecutionName) -> Self {
        match e {
            ExecutionName::Sequential => Execution::Sequential,
            ExecutionName::Parallel => Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub cfl_sigma: Option<f64>,
    pub grad_clamp: Option<f64>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    pub eps_num: Option<f64>,
    pub fixed_dt: Option<f64>,
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub execution: ExecutionName,
}

impl SolverConfig {
    fn build(&self) -> SolverControls {
        let d = SolverControls::default();
        SolverControls {
            cfl_sigma: self.cfl_sigma.unwrap_or(d.cfl_sigma),
            grad_clamp: self.grad_clamp,
            snapshot_times: self.snapshot_times.clone(),
            eps_num: self.eps_num,
            fixed_dt: self.fixed_dt,
            max_steps: self.max_steps.unwrap_or(d.max_steps),
            execution: self.execution.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    P,
    PPrime,
    Eps,
    Eps1Eps2,
}

impl From<AxisName> for PerturbAxis {
    fn from(a: AxisName) -> Self {
        match a {
            AxisName::P => PerturbAxis::P,
            AxisName::PPrime => PerturbAxis::PPrime,
            AxisName::Eps => PerturbAxis::Eps,
            AxisName::Eps1Eps2 => PerturbAxis::Eps1Eps2,
        }
    }
}

fn default_margin() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    pub case: String,
    pub theta: f64,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub p_prime: Option<f64>,
    pub q_prime: Option<f64>,
    pub m: Option<f64>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl TheoryConfig {
    fn build(&self) -> Result<TheoryRef, CliError> {
        let case = parse_case(&self.case)?;
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(config_err(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        let params = RateParams {
            p: self.p,
            q: self.q,
            p_prime: self.p_prime,
            q_prime: self.q_prime,
            theta: self.theta,
            m: self.m,
        };
        // surface window violations now rather than after the solves
        plap_core::operator::family_rate(case, &params).map_err(lib_err)?;
        Ok(TheoryRef {
            case,
            params,
            margin: self.margin,
        })
    }
}

pub fn parse_case(name: &str) -> Result<FamilyCase, CliError> {
    FamilyCase::from_name(name).ok_or_else(|| {
        let names: Vec<&str> = FamilyCase::ALL.iter().map(|c| c.name()).collect();
        config_err(format!(
            "unknown case {name:?}; expected one of {}",
            names.join(", ")
        ))
    })
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: AxisName,
    pub values: Vec<f64>,
    #[serde(default)]
    pub gap_times: Vec<f64>,
    #[serde(default = "default_true")]
    pub shared_dt: bool,
    #[serde(default = "default_true")]
    pub measure_floor: bool,
    pub theory: Option<TheoryConfig>,
    pub oracle: Option<ExactConfig>,
}

fn default_run_id() -> String {
    "run".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    #[serde(default = "default_run_id")]
    pub run_id: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            run_id: default_run_id(),
        }
    }
}

/// Problem, optional sweep and output location.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub operator: OperatorConfig,
    #[serde(default)]
    pub hamiltonian: HamiltonianConfig,
    pub grid: GridConfig,
    pub data: DataSpec,
    /// Separate Dirichlet data; defaults to `data`.
    pub boundary_data: Option<DataSpec>,
    pub horizon: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Versioned for ExperimentConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

impl ExperimentConfig {
    pub fn run_id(&self) -> Result<&str, CliError> {
        let id = self.output.run_id.as_str();
        let ok = !id.is_empty()
            && id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
        if ok {
            Ok(id)
        } else {
            Err(config_err(format!(
                "run_id {id:?} must be nonempty [A-Za-z0-9_.-]"
            )))
        }
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        let spec = self.operator.build()?;
        let grid = self.grid.build()?;
        let data = self.data.build(grid.dim())?;
        let mut problem = Problem::new(spec, grid.clone(), data, self.horizon).map_err(lib_err)?;
        problem = match &self.hamiltonian {
            HamiltonianConfig::Default => problem,
            HamiltonianConfig::Zero => problem.with_hamiltonian(HamiltonianSpec::zero()),
            HamiltonianConfig::Biased { a, eps2 } => {
                if !(a.is_finite() && *eps2 >= 0.0 && eps2.is_finite()) {
                    return Err(config_err("biased hamiltonian needs finite a and eps2 ≥ 0"));
                }
                problem.with_hamiltonian(HamiltonianSpec::biased(*a, *eps2))
            }
        };
        if let Some(b) = &self.boundary_data {
            if grid.boundary() != Boundary::Dirichlet {
                return Err(config_err("boundary_data requires a dirichlet grid"));
            }
            problem = problem
                .with_dirichlet(b.build(grid.dim())?)
                .map_err(lib_err)?;
        }
        problem = problem
            .with_controls(self.solver.build())
            .map_err(lib_err)?;
        // evaluates the data everywhere, so non-finite values are caught here
        problem.initial_field().map_err(lib_err)?;
        Ok(problem)
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan, CliError> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| config_err("config has no \"sweep\" section"))?;
        let mut plan = SweepPlan::new(
            self.problem()?,
            sweep.axis.into(),
            sweep.values.clone(),
            sweep.gap_times.clone(),
        )
        .map_err(lib_err)?;
        plan.shared_dt = sweep.shared_dt;
        plan.measure_floor = sweep.measure_floor;
        plan.execution = self.solver.execution.into();
        plan.theory = sweep.theory.as_ref().map(TheoryConfig::build).transpose()?;
        if let Some(o) = &sweep.oracle {
            if !matches!(sweep.axis, AxisName::P) {
                return Err(config_err("an oracle needs the \"p\" sweep axis"));
            }
            plan.oracle = Some(o.build()?);
        }
        Ok(plan)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiConfig {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    #[serde(default)]
    pub extra_dirs: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateConfig {
    pub alpha: f64,
    pub beta: f64,
    pub c_a: f64,
    /// Test exponent; defaults to the family's window default.
    pub k: Option<f64>,
}

/// Input of `check-c1`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct C1Config {
    pub schema_version: u32,
    pub operator: OperatorConfig,
    pub axis: AxisName,
    pub eps: Vec<f64>,
    pub xi: XiConfig,
    pub candidate: CandidateConfig,
}

impl Versioned for C1Config {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

impl C1Config {
    pub fn build(&self, seed: u64) -> Result<(OperatorSpec, XiGrid, C1Params), CliError> {
        let spec = self.operator.build()?;
        let xi = XiGrid::log_spaced(
            self.xi.dim,
            self.xi.lo,
            self.xi.hi,
            self.xi.count,
            self.xi.extra_dirs,
            seed,
        )
        .map_err(lib_err)?;
        let k = self
            .candidate
            .k
            .unwrap_or_else(|| spec.default_test_exponent());
        let c = &self.candidate;
        let params = C1Params::new(c.alpha, c.beta, c.c_a, k).map_err(lib_err)?;
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(config_err("eps must be a nonempty list of positive values"));
        }
        for &e in &self.eps {
            spec.perturbed(self.axis.into(), e).map_err(lib_err)?;
        }
        Ok((spec, xi, params))
    }
}
