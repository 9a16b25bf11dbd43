use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use plap_core::evolver::{snapshot_file_name, solve as solve_problem};
use plap_core::exact::{ExactKind, ExactSolution, ResidualMode};
use plap_core::harness::run_sweep;
use plap_core::operator::{c1_certify, family_rate, RateParams};
use plap_core::{format_f64, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{self, parse_case, parse_exact_kind, C1Config, ExperimentConfig};
use crate::json::{num, nums, opt, render};
use crate::{CliError, Globals};

fn out_dir(globals: &Globals, configured: Option<&PathBuf>) -> PathBuf {
    globals
        .out
        .clone()
        .or_else(|| configured.cloned())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

pub fn solve(path: &Path, globals: &Globals) -> Result<(), CliError> {
    let cfg: ExperimentConfig = config::read(path)?;
    let run_id = cfg.run_id()?.to_string();
    let problem = cfg.problem()?;
    let dir = out_dir(globals, cfg.output.dir.as_ref());

    let solution = solve_problem(&problem)?;
    let mut files = Vec::new();
    for snap in &solution.snapshots {
        let name = snapshot_file_name(&run_id, snap.time());
        write_file(&dir, &name, &snap.to_csv())?;
        files.push(json!({ "time": num(snap.time()), "file": name }));
    }
    let s = &solution.stats;
    let stats = json!({
        "run_id": run_id,
        "family": problem.spec().family().name(),
        "horizon": num(problem.horizon()),
        "steps": s.steps,
        "min_dt": num(s.min_dt),
        "max_dt": num(s.max_dt),
        "overshoot": num(s.overshoot),
        "grad_clamp": num(s.grad_clamp),
        "eps_num": num(s.eps_num),
        "snapshots": files,
    });
    let stats_path = write_file(&dir, &format!("{run_id}_stats.json"), &render(&stats))?;
    println!(
        "solved to T = {} in {} steps; {} snapshots, stats in {}",
        format_f64(problem.horizon()),
        s.steps,
        solution.snapshots.len(),
        stats_path.display()
    );
    Ok(())
}

pub fn rate_sweep(path: &Path, globals: &Globals) -> Result<(), CliError> {
    let cfg: ExperimentConfig = config::read(path)?;
    let run_id = cfg.run_id()?.to_string();
    let plan = cfg.sweep_plan()?;
    let dir = out_dir(globals, cfg.output.dir.as_ref());

    let report = run_sweep(&plan)?;
    write_file(&dir, &format!("{run_id}_rate.csv"), &report.to_csv())?;
    let fit_path = write_file(&dir, &format!("{run_id}_fit.json"), &report.summary_json())?;
    let used = report.rows.iter().filter(|r| !r.excluded).count();
    print!(
        "slope {} over {used} of {} gaps",
        format_f64(report.fit.slope),
        report.rows.len()
    );
    match &report.verdict {
        Some(v) => println!("; consistent = {} ({})", v.consistent, v.detail),
        None => println!(),
    }
    println!("fit written to {}", fit_path.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// heat_mode, barenblatt, radial_elliptic, torsion or fundamental.
    #[arg(long)]
    solution: String,
    #[arg(long)]
    p: f64,
    /// Space dimension.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Barenblatt mass constant.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Torsion source constant.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Minimum distance from the origin and from free boundaries.
    #[arg(long, default_value_t = 1e-2)]
    clearance: f64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Use finite-difference stencils with this spacing instead of exact derivatives.
    #[arg(long)]
    h: Option<f64>,
}

fn sample_point(sol: &ExactSolution, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let n = sol.dim();
    let mut dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-9 {
        dir = vec![0.0; n];
        dir[0] = 1.0;
    } else {
        dir.iter_mut().for_each(|v| *v /= norm);
    }
    match sol.kind() {
        ExactKind::HeatMode => {
            let x = (0..n)
                .map(|_| rng.random_range(0.0..2.0 * std::f64::consts::PI))
                .collect();
            (x, rng.random_range(0.0..1.0))
        }
        ExactKind::Barenblatt => {
            let t = rng.random_range(1.0..2.0);
            let radius = sol.free_boundary_radius(t).unwrap_or(1.0);
            let r = rng.random_range(0.0..radius);
            (dir.iter().map(|v| v * r).collect(), t)
        }
        _ => {
            let r = rng.random_range(0.01..1.0);
            (dir.iter().map(|v| v * r).collect(), 0.0)
        }
    }
}

pub fn verify_exact(args: &VerifyArgs, globals: &Globals) -> Result<(), CliError> {
    let kind = parse_exact_kind(&args.solution)?;
    let sol = ExactSolution::new(kind, args.p, args.n, args.a, args.c)
        .map_err(|e| CliError::Config(format!("parameter outside validity: {e}")))?;
    if !(args.clearance >= 0.0 && args.clearance.is_finite()) {
        return Err(CliError::Config("clearance must be ≥ 0".into()));
    }
    if args.samples == 0 {
        return Err(CliError::Config("samples must be positive".into()));
    }
    let mode = match args.h {
        None => ResidualMode::Analytic,
        Some(h) if h > 0.0 && h.is_finite() => ResidualMode::Discrete { h },
        Some(h) => return Err(CliError::Config(format!("h must be positive, got {h}"))),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(globals.seed);
    let (mut worst, mut worst_x, mut worst_t) = (0.0f64, Vec::new(), 0.0);
    let (mut evaluated, mut skipped) = (0usize, 0usize);
    for _ in 0..args.samples {
        let (x, t) = sample_point(&sol, &mut rng);
        match sol.residual(&x, t, mode, args.clearance) {
            Ok(r) => {
                evaluated += 1;
                if r.abs() > worst || worst_x.is_empty() {
                    worst = r.abs();
                    worst_x = x;
                    worst_t = t;
                }
            }
            Err(Error::SingularPoint(_)) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if evaluated == 0 {
        return Err(CliError::Config(
            "every sample fell inside the clearance zone".into(),
        ));
    }
    let report = json!({
        "solution": kind.name(),
        "p": num(args.p),
        "n": args.n,
        "mode": if args.h.is_some() { "discrete" } else { "analytic" },
        "h": opt(args.h),
        "clearance": num(args.clearance),
        "seed": globals.seed,
        "evaluated": evaluated,
        "skipped": skipped,
        "max_abs_residual": num(worst),
        "worst_x": nums(&worst_x),
        "worst_t": num(worst_t),
    });
    let text = render(&report);
    if let Some(dir) = &globals.out {
        write_file(dir, &format!("verify_{}.json", kind.name()), &text)?;
    }
    print!("{text}");
    Ok(())
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Stability case, e.g. normalized, regularization, general_fixed_pprime.
    #[arg(long)]
    case: String,
    /// Hölder exponents of the data, each in (0, 1].
    #[arg(long, num_args = 1.., required = true)]
    theta: Vec<f64>,
    #[arg(long, num_args = 1..)]
    p: Vec<f64>,
    #[arg(long, num_args = 1..)]
    q: Vec<f64>,
    #[arg(long = "p-prime", num_args = 1..)]
    p_prime: Vec<f64>,
    #[arg(long = "q-prime", num_args = 1..)]
    q_prime: Vec<f64>,
    /// Free interpolation exponent of the regularization cases.
    #[arg(long, num_args = 1..)]
    m: Vec<f64>,
}

/// Every combination of the given values; an empty list contributes `None`.
fn product(lists: &[&[f64]]) -> Vec<Vec<Option<f64>>> {
    let mut rows = vec![Vec::new()];
    for list in lists {
        let choices: Vec<Option<f64>> = if list.is_empty() {
            vec![None]
        } else {
            list.iter().copied().map(Some).collect()
        };
        rows = rows
            .into_iter()
            .flat_map(|row| {
                choices.iter().map(move |c| {
                    let mut r = row.clone();
                    r.push(*c);
                    r
                })
            })
            .collect();
    }
    rows
}

pub fn rate_table(args: &TableArgs, globals: &Globals) -> Result<(), CliError> {
    let case = parse_case(&args.case)?;
    let cell = |v: Option<f64>| v.map_or(String::new(), format_f64);
    let mut out = String::from("case,theta,p,q,p_prime,q_prime,m,nu,attained\n");
    let lists = [
        &args.theta[..],
        &args.p,
        &args.q,
        &args.p_prime,
        &args.q_prime,
        &args.m,
    ];
    for row in product(&lists) {
        let params = RateParams {
            theta: row[0].expect("theta is required"),
            p: row[1],
            q: row[2],
            p_prime: row[3],
            q_prime: row[4],
            m: row[5],
        };
        let pred = family_rate(case, &params).map_err(|e| CliError::Config(e.to_string()))?;
        let cells: Vec<String> = row.iter().map(|v| cell(*v)).collect();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            case.name(),
            cells.join(","),
            format_f64(pred.nu_sup),
            pred.attained
        );
    }
    if let Some(dir) = &globals.out {
        write_file(dir, "rate_table.csv", &out)?;
    }
    print!("{out}");
    Ok(())
}

pub fn check_c1(path: &Path, globals: &Globals) -> Result<(), CliError> {
    let cfg: C1Config = config::read(path)?;
    let (spec, xi, params) = cfg.build(globals.seed)?;
    let report = c1_certify(&spec, cfg.axis.into(), &cfg.eps, &xi, &params)?;
    let doc = json!({
        "family": spec.family().name(),
        "alpha": num(params.alpha),
        "beta": num(params.beta),
        "c_a": num(params.c_a),
        "k": num(params.k),
        "seed": globals.seed,
        "pass": report.pass,
        "max_ratio": num(report.max_ratio),
        "worst_xi": nums(&report.worst_xi),
        "worst_eps": num(report.worst_eps),
    });
    let text = render(&doc);
    if let Some(dir) = &globals.out {
        write_file(dir, "c1_report.json", &text)?;
    }
    print!("{text}");
    Ok(())
}
