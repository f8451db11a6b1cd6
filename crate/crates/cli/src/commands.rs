//! The `run`, `check-gradient` and `compare` commands.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajopt_core::costate::closed_loop_direction;
use trajopt_core::lqr::{curve_jacobians, linearize, riccati_gains};
use trajopt_core::ocp::eval_cost;
use trajopt_core::oracle::{fd_reduced_gradient, lqr_tracking_solution, max_relative_error};
use trajopt_core::projection::project;
use trajopt_core::solvers::{solve, IterateLog, Method, SolveResult, SolverConfig, Termination};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::io::{write_comparison, write_iterates, write_trajectory};
use crate::setup::{Experiment, Plant};
use crate::svg::{line_plot, Series};

pub const EXIT_CONVERGED: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_ITERATION_CAP: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";
pub const DEFAULT_OUTPUT_DIR: &str = "out";

/// Command-line settings that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(dir) = &overrides.output_dir {
        cfg.output_dir = Some(dir.clone());
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from(DEFAULT_OUTPUT_DIR));
    }
    Ok(cfg)
}

fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn report(err: &CliError) -> u8 {
    eprintln!("error: {err}");
    err.exit_code()
}

/// Result of one solver run written to disk.
pub struct RunReport {
    pub method: Method,
    pub exit_code: u8,
    pub log: IterateLog,
    pub summary: String,
}

fn exit_code_of(result: &SolveResult) -> u8 {
    match result {
        Ok(sol) if sol.termination == Termination::Converged => EXIT_CONVERGED,
        Ok(_) => EXIT_ITERATION_CAP,
        Err(_) => EXIT_SOLVER,
    }
}

/// Runs `solver` on `exp` and writes iterates, trajectory, summary and plots
/// into `dir`.
pub fn run_into(exp: &Experiment, solver: &SolverConfig, dir: &Path) -> Result<RunReport, CliError> {
    fs::create_dir_all(dir)?;
    let result = solve(&exp.problem(), solver);
    let exit_code = exit_code_of(&result);
    let log = match &result {
        Ok(sol) => sol.log.clone(),
        Err(e) => e.log.clone(),
    };
    write_iterates(BufWriter::new(File::create(dir.join("iterates.csv"))?), &log)?;

    let mut summary = String::new();
    let _ = writeln!(summary, "method: {}", solver.method);
    match &result {
        Ok(sol) => {
            let reason = match sol.termination {
                Termination::Converged => "converged (squared gradient norm <= grad_tol)",
                Termination::IterationCap => "iteration cap reached",
            };
            let _ = writeln!(summary, "termination: {reason}");
        }
        Err(e) => {
            let _ = writeln!(summary, "termination: solver error: {e}");
        }
    }
    let iterations = log.len().saturating_sub(1);
    let _ = writeln!(summary, "iterations: {iterations}");
    if let Some(last) = log.last() {
        let _ = writeln!(summary, "final cost: {:.16e}", last.cost);
        let _ = writeln!(summary, "final grad_sq_norm: {:.16e}", last.grad_sq_norm);
        let _ = writeln!(summary, "final pmp_residual: {:.16e}", last.pmp_residual);
        let _ = writeln!(summary, "max feasibility_residual: {:.16e}", log.max_feasibility_residual());
        let _ = writeln!(summary, "line-search trials stopped by the divergence guard: {}", log.total_diverged_trials());
        let _ = writeln!(summary, "wall time: {:.3} s", last.wall_time);
    }

    if let Ok(sol) = &result {
        write_trajectory(
            BufWriter::new(File::create(dir.join("trajectory.csv"))?),
            &sol.trajectory,
            exp.delta(),
            exp.cost.x_ref(),
            exp.cost.u_ref(),
        )?;
        fs::write(dir.join("trajectory.svg"), trajectory_plot(exp, &sol.trajectory))?;
        if let Plant::Linear(model) = &exp.plant {
            let oracle = lqr_tracking_solution(model, &exp.cost, &exp.x_init)?;
            let oracle_cost = eval_cost(&oracle, &exp.cost)?;
            let final_cost = log.last().map_or(f64::NAN, |r| r.cost);
            let _ = writeln!(summary, "lqr oracle cost: {oracle_cost:.16e}");
            let _ = writeln!(
                summary,
                "relative cost difference: {:.3e}",
                (final_cost - oracle_cost).abs() / oracle_cost.abs().max(f64::MIN_POSITIVE)
            );
        }
    }
    fs::write(dir.join("convergence.svg"), convergence_plot(&[(solver.method.to_string(), &log)]))?;
    fs::write(dir.join("summary.txt"), &summary)?;
    Ok(RunReport {
        method: solver.method,
        exit_code,
        log,
        summary,
    })
}

fn convergence_plot(runs: &[(String, &IterateLog)]) -> String {
    let series: Vec<Series> = runs
        .iter()
        .map(|(name, log)| {
            Series::new(
                name.clone(),
                log.records().iter().map(|r| (r.k as f64, r.grad_sq_norm)).collect(),
            )
        })
        .collect();
    line_plot("Squared gradient norm", "iteration k", "||grad J||^2", &series, true)
}

fn trajectory_plot(exp: &Experiment, traj: &trajopt_core::ocp::Trajectory) -> String {
    let delta = exp.delta();
    // Angles for pendulum models, every state otherwise.
    let indices: Vec<usize> = match exp.plant.angle_pairs() {
        Some(pairs) => pairs.iter().map(|p| p.0).collect(),
        None => (0..traj.state_dim()).collect(),
    };
    let mut series = Vec::new();
    for &i in indices.iter().take(8) {
        let pts = |xs: &[trajopt_core::ocp::Vector]| xs.iter().enumerate().map(|(t, x)| (t as f64 * delta, x[i])).collect();
        series.push(Series::new(format!("x_{i}"), pts(traj.x())));
        series.push(Series::new(format!("x_ref_{i}"), pts(exp.cost.x_ref())).dashed());
    }
    line_plot("Optimal trajectory and reference", "t [s]", "state", &series, false)
}

/// `run <config>`.
pub fn run(config_path: &Path, overrides: &Overrides) -> u8 {
    let outcome = (|| {
        let cfg = load(config_path, overrides)?;
        let dir = output_dir(&cfg);
        let exp = Experiment::resolve(cfg)?;
        fs::create_dir_all(&dir)?;
        fs::write(dir.join(RESOLVED_CONFIG), exp.config.to_toml())?;
        let solver = exp.config.solver.clone();
        run_into(&exp, &solver, &dir)
    })();
    match outcome {
        Ok(report) => {
            print!("{}", report.summary);
            report.exit_code
        }
        Err(e) => report(&e),
    }
}

pub const MAX_CHECK_STEPS: usize = 100;
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Amplitude of the uniform perturbation added to the initial curve.
pub const CHECK_PERTURBATION: f64 = 0.3;

/// Max relative error between the adjoint gradient and central differences
/// of the reduced cost at a seeded random curve.
pub fn gradient_error(exp: &Experiment, fd_step: f64) -> Result<f64, CliError> {
    let model = exp.plant.dynamics();
    let (a, b) = curve_jacobians(&exp.initial_curve, model);
    let gains = riccati_gains(&a, &b, &exp.regulator)?;
    let mut rng = ChaCha8Rng::seed_from_u64(exp.config.seed);
    let mut curve = exp.initial_curve.clone();
    for i in 0..curve.dim() {
        *curve.coord_mut(i) += rng.random_range(-CHECK_PERTURBATION..CHECK_PERTURBATION);
    }
    let traj = project(&curve, &gains, &exp.x_init, model)?;
    let grad = closed_loop_direction(&linearize(&traj, model, &exp.cost), &gains)
        .to_curve()
        .scale(-1.0);
    let reference = fd_reduced_gradient(&curve, &gains, &exp.x_init, model, &exp.cost, fd_step)?;
    Ok(max_relative_error(&grad, &reference))
}

/// `check-gradient <config> [--T n] [--tol x]`.
pub fn check_gradient(
    config_path: &Path,
    overrides: &Overrides,
    steps: Option<usize>,
    tol: f64,
    fd_step: f64,
) -> u8 {
    let outcome = (|| {
        let cfg = load(config_path, overrides)?;
        let steps = match steps {
            Some(s) => s,
            None => cfg.horizon.steps()?,
        };
        if steps == 0 || steps > MAX_CHECK_STEPS {
            return Err(CliError::config(
                "T",
                format!("gradient check needs 1 <= T <= {MAX_CHECK_STEPS}, got {steps}"),
            ));
        }
        if !(fd_step > 0.0) {
            return Err(CliError::config("fd-step", "must be positive"));
        }
        let exp = Experiment::resolve_with_steps(cfg, steps)?;
        gradient_error(&exp, fd_step).map(|err| (steps, err))
    })();
    match outcome {
        Ok((steps, err)) => {
            let pass = err <= tol;
            println!("T = {steps}: max relative error {err:.3e} (tolerance {tol:.3e}) {}", if pass { "PASS" } else { "FAIL" });
            if pass {
                EXIT_CONVERGED
            } else {
                EXIT_SOLVER
            }
        }
        Err(e) => report(&e),
    }
}

pub fn parse_methods(list: &str) -> Result<Vec<Method>, CliError> {
    let mut methods = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m = Method::from_str(name).map_err(|e| CliError::config("methods", e.to_string()))?;
        if methods.contains(&m) {
            return Err(CliError::config("methods", format!("`{name}` listed twice")));
        }
        methods.push(m);
    }
    if methods.len() < 2 {
        return Err(CliError::config("methods", "compare needs at least two methods"));
    }
    Ok(methods)
}

/// `compare <config> --methods a,b,c`. Each method writes into
/// `<output_dir>/<method>/`; the grid of squared gradient norms goes to
/// `comparison.csv` and `comparison.svg`.
pub fn compare(config_path: &Path, overrides: &Overrides, methods: &str) -> u8 {
    let prepared = (|| {
        let methods = parse_methods(methods)?;
        let cfg = load(config_path, overrides)?;
        let configs = methods
            .iter()
            .map(|&m| {
                let c = cfg.solver.with_method(m);
                c.validate().map_err(|reason| CliError::config(format!("solver ({m})"), reason))?;
                Ok(c)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let exp = Experiment::resolve(cfg)?;
        let dir = output_dir(&exp.config);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join(RESOLVED_CONFIG), exp.config.to_toml())?;
        Ok((exp, configs, dir))
    })();
    let (exp, configs, dir) = match prepared {
        Ok(p) => p,
        Err(e) => return report(&e),
    };

    let reports: Vec<Result<RunReport, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|solver| {
                let (exp, sub) = (&exp, dir.join(solver.method.name()));
                scope.spawn(move || run_into(exp, solver, &sub))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });

    let mut exit = EXIT_CONVERGED;
    let mut finished = Vec::new();
    println!("{:<20} {:>10} {:>24} {:>24}", "method", "iterations", "final grad_sq_norm", "first k with <= 1e-6");
    for (solver, rep) in configs.iter().zip(&reports) {
        match rep {
            Ok(r) => {
                let last = r.log.last().map_or(f64::NAN, |l| l.grad_sq_norm);
                let reached = r.log.iterations_to(1e-6).map_or("-".to_string(), |k| k.to_string());
                println!("{:<20} {:>10} {:>24.6e} {:>24}", r.method.name(), r.log.len().saturating_sub(1), last, reached);
                if r.exit_code == EXIT_SOLVER {
                    eprintln!("{}: {}", r.method, r.summary.lines().nth(1).unwrap_or(""));
                }
                exit = exit.max(r.exit_code);
                finished.push((r.method.name().to_string(), &r.log));
            }
            Err(e) => {
                eprintln!("{}: {e}", solver.method);
                exit = EXIT_SOLVER;
            }
        }
    }
    let written = (|| -> Result<(), CliError> {
        write_comparison(BufWriter::new(File::create(dir.join("comparison.csv"))?), &finished)?;
        fs::write(dir.join("comparison.svg"), convergence_plot(&finished))?;
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_SOLVER;
    }
    exit
}
