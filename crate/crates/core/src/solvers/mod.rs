//! Solver loops: closed-loop gradient, conjugate gradient, heavy-ball,
//! Nesterov, and the open-loop gradient baseline.

mod armijo;
mod config;
mod log;

use std::cell::Cell;
use std::time::Instant;

use thiserror::Error;

pub use armijo::{armijo_search, ArmijoParams, ArmijoStep, LineSearchError};
pub use config::{GainPolicy, Method, SolverConfig, StepRule};
pub use log::{IterateLog, IterateRecord};

use crate::costate::{closed_loop_direction, open_loop_direction, pmp_residual, DescentDirection};
use crate::error::{check_len, Error};
use crate::lqr::{curve_jacobians, linearize, riccati_gains, riccati_gains_for, Linearization, RegulatorWeights};
use crate::ocp::{eval_cost, CostModel, Curve, DynamicsModel, Trajectory, Vector};
use crate::projection::{feasibility_residual, project, GainSchedule};

/// Momentum methods abort once the cost exceeds this multiple of the initial cost.
pub const COST_BLOWUP_FACTOR: f64 = 1e6;

/// CG combination coefficients are zeroed below this denominator.
const RHO_DENOMINATOR_FLOOR: f64 = 1e-14;

/// A problem instance ready for a solver.
pub struct Problem<'a> {
    pub model: &'a dyn DynamicsModel,
    pub cost: &'a dyn CostModel,
    pub x_init: Vector,
    /// Starting curve. Its first state is overwritten with `x_init`.
    pub initial_curve: Curve,
    /// Weights for the feedback gains (unused by the open-loop method).
    pub regulator: RegulatorWeights,
}

impl Problem<'_> {
    fn validate(&self) -> Result<(), Error> {
        let n = self.model.state_dim();
        let m = self.model.input_dim();
        let steps = self.cost.steps();
        check_len("cost state", 0, n, self.cost.state_dim())?;
        check_len("cost input", 0, m, self.cost.input_dim())?;
        check_len("initial state", 0, n, self.x_init.len())?;
        check_len("initial curve steps", 0, steps, self.initial_curve.steps())?;
        check_len("initial curve state", 0, n, self.initial_curve.state_dim())?;
        check_len("initial curve input", 0, m, self.initial_curve.input_dim())?;
        for (what, w, dim) in [
            ("regulator Q", &self.regulator.q, n),
            ("regulator R", &self.regulator.r, m),
            ("regulator Qf", &self.regulator.qf, n),
        ] {
            check_len(what, 0, dim, w.nrows())?;
            check_len(what, 0, dim, w.ncols())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationCap,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub curve: Curve,
    /// Gains used for the last projection.
    pub gains: GainSchedule,
    pub log: IterateLog,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveFailure {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("iteration {iteration}: {source}")]
    LineSearch {
        iteration: usize,
        source: LineSearchError,
    },
    #[error("iteration {iteration}: rollout diverged ({source})")]
    Diverged { iteration: usize, source: Error },
    #[error("iteration {iteration}: cost {cost:e} exceeds {COST_BLOWUP_FACTOR:e} times the initial cost {initial:e}")]
    CostBlowup {
        iteration: usize,
        cost: f64,
        initial: f64,
    },
}

/// Solver failure together with the iterates logged before it.
#[derive(Debug, Clone, Error)]
#[error("{failure}")]
pub struct SolveError {
    #[source]
    pub failure: SolveFailure,
    pub log: IterateLog,
}

pub type SolveResult = Result<Solution, SolveError>;

/// Runs `cfg.method`.
pub fn solve(problem: &Problem<'_>, cfg: &SolverConfig) -> SolveResult {
    Run::new(problem, cfg)
        .map_err(|failure| SolveError {
            failure,
            log: IterateLog::new(),
        })?
        .solve()
}

pub fn solve_gradient(problem: &Problem<'_>, cfg: &SolverConfig) -> SolveResult {
    solve(problem, &cfg.with_method(Method::Gradient))
}

pub fn solve_cg(problem: &Problem<'_>, cfg: &SolverConfig) -> SolveResult {
    solve(problem, &cfg.with_method(Method::Cg))
}

pub fn solve_heavy_ball(problem: &Problem<'_>, cfg: &SolverConfig) -> SolveResult {
    solve(problem, &cfg.with_method(Method::HeavyBall))
}

pub fn solve_nesterov(problem: &Problem<'_>, cfg: &SolverConfig) -> SolveResult {
    solve(problem, &cfg.with_method(Method::Nesterov))
}

pub fn solve_open_loop(problem: &Problem<'_>, cfg: &SolverConfig) -> SolveResult {
    solve(problem, &cfg.with_method(Method::OpenLoopGradient))
}

/// Zeroes the `alpha_0` block; the first curve state is pinned to `x_init`.
fn free_part(mut dir: Curve) -> Curve {
    dir.alpha_mut()[0].fill(0.0);
    dir
}

/// Per-timestep Polak-Ribiere combination of the new gradient direction with
/// the previous search direction.
fn cg_direction(grad: &Curve, prev_grad: &Curve, prev_dir: &Curve) -> Curve {
    fn combine(g: &[Vector], g_prev: &[Vector], d_prev: &[Vector]) -> Vec<Vector> {
        g.iter()
            .zip(g_prev)
            .zip(d_prev)
            .map(|((g, gp), dp)| {
                let denom = gp.norm_squared();
                let rho = if denom < RHO_DENOMINATOR_FLOOR {
                    0.0
                } else {
                    g.dot(&(g - gp)) / denom
                };
                g + dp * rho
            })
            .collect()
    }
    Curve::new(
        combine(grad.alpha(), prev_grad.alpha(), prev_dir.alpha()),
        combine(grad.mu(), prev_grad.mu(), prev_dir.mu()),
    )
    .expect("same shapes")
}

struct CgMemory {
    grad: Curve,
    dir: Curve,
    since_restart: usize,
}

struct Run<'p, 'a> {
    problem: &'p Problem<'a>,
    cfg: &'p SolverConfig,
    gains: GainSchedule,
    curve: Curve,
    prev_curve: Curve,
    traj: Trajectory,
    cost: f64,
    initial_cost: f64,
    log: IterateLog,
    started: Instant,
    /// Trial rollouts of the current step stopped by the divergence guard.
    diverged_trials: Cell<usize>,
}

impl<'p, 'a> Run<'p, 'a> {
    fn new(problem: &'p Problem<'a>, cfg: &'p SolverConfig) -> Result<Self, SolveFailure> {
        cfg.validate().map_err(SolveFailure::Config)?;
        problem.validate()?;
        let started = Instant::now();
        let mut curve = problem.initial_curve.clone();
        curve.alpha_mut()[0] = problem.x_init.clone();

        let gains = if cfg.method == Method::OpenLoopGradient {
            GainSchedule::zeros(curve.steps(), curve.state_dim(), curve.input_dim())
        } else {
            let (a, b) = curve_jacobians(&curve, problem.model);
            riccati_gains(&a, &b, &problem.regulator)?
        };
        let traj = project(&curve, &gains, &problem.x_init, problem.model)
            .map_err(|source| SolveFailure::Diverged { iteration: 0, source })?;
        let cost = eval_cost(&traj, problem.cost)?;
        if cfg.method == Method::OpenLoopGradient {
            // Zero gains: the curve's states play no role, keep them equal to the rollout.
            curve = Curve::from_trajectory(&traj);
        }
        Ok(Self {
            problem,
            cfg,
            gains,
            prev_curve: curve.clone(),
            curve,
            traj,
            cost,
            initial_cost: cost,
            log: IterateLog::new(),
            started,
            diverged_trials: Cell::new(0),
        })
    }

    fn fail(self, failure: SolveFailure) -> SolveError {
        SolveError {
            failure,
            log: self.log,
        }
    }

    fn project(&self, curve: &Curve) -> Result<(Trajectory, f64), Error> {
        let traj = project(curve, &self.gains, &self.problem.x_init, self.problem.model)?;
        let cost = eval_cost(&traj, self.problem.cost)?;
        Ok((traj, cost))
    }

    fn direction(&self, lin: &Linearization) -> DescentDirection {
        if self.cfg.method == Method::OpenLoopGradient {
            open_loop_direction(lin)
        } else {
            closed_loop_direction(lin, &self.gains)
        }
    }

    fn armijo_step(&self, dir: &Curve, grad_dot_dir: f64, k: usize) -> Result<(Curve, Trajectory, f64, f64), SolveFailure> {
        let StepRule::Armijo {
            gamma0,
            beta,
            slope,
            max_backtracks,
        } = self.cfg.step_rule
        else {
            unreachable!("armijo_step called with a constant step rule");
        };
        let params = ArmijoParams {
            gamma0,
            beta,
            slope,
            max_backtracks,
        };
        let mut accepted = None;
        let step = armijo_search(
            |trial| {
                let (traj, cost) = match self.project(trial) {
                    Ok(v) => v,
                    Err(e) => {
                        if matches!(e, Error::Divergence { .. }) {
                            self.diverged_trials.set(self.diverged_trials.get() + 1);
                        }
                        return None;
                    }
                };
                accepted = Some((trial.clone(), traj));
                cost.is_finite().then_some(cost)
            },
            &self.curve,
            self.cost,
            dir,
            grad_dot_dir,
            &params,
        )
        .map_err(|source| SolveFailure::LineSearch { iteration: k, source })?;
        let (curve, traj) = accepted.expect("accepted trial was evaluated");
        Ok((curve, traj, step.cost, step.gamma))
    }

    fn constant_step(&self, next: Curve, k: usize) -> Result<(Curve, Trajectory, f64), SolveFailure> {
        let (traj, cost) = self
            .project(&next)
            .map_err(|source| SolveFailure::Diverged { iteration: k, source })?;
        if !cost.is_finite() || cost > COST_BLOWUP_FACTOR * self.initial_cost {
            return Err(SolveFailure::CostBlowup {
                iteration: k,
                cost,
                initial: self.initial_cost,
            });
        }
        Ok((next, traj, cost))
    }

    fn gamma(&self) -> f64 {
        match self.cfg.step_rule {
            StepRule::Constant { gamma } => gamma,
            StepRule::Armijo { .. } => unreachable!("constant step requested under armijo"),
        }
    }

    fn solve(mut self) -> SolveResult {
        let cfg = self.cfg;
        let closed_loop = cfg.method != Method::OpenLoopGradient;
        let mut cg: Option<CgMemory> = None;
        let steps = self.curve.steps();

        for k in 0.. {
            let lin = linearize(&self.traj, self.problem.model, self.problem.cost);
            if closed_loop && cfg.gain_policy == GainPolicy::RefreshEachIter {
                match riccati_gains_for(&lin, &self.problem.regulator) {
                    Ok(g) => self.gains = g,
                    Err(e) => return Err(self.fail(e.into())),
                }
                // The current trajectory is a fixed point of the projection
                // for any gains, so anchoring the curve there keeps J unchanged.
                self.curve = Curve::from_trajectory(&self.traj);
                if k == 0 {
                    self.prev_curve = self.curve.clone();
                }
            }
            let dir = self.direction(&lin);
            let grad = free_part(dir.to_curve());
            let grad_sq = grad.sq_norm();
            self.log.push(IterateRecord {
                k,
                cost: self.cost,
                grad_sq_norm: grad_sq,
                step_size: 0.0,
                feasibility_residual: feasibility_residual(&self.traj, self.problem.model),
                pmp_residual: pmp_residual(&lin, &dir),
                wall_time: self.started.elapsed().as_secs_f64(),
                diverged_trials: 0,
            });
            if grad_sq <= cfg.grad_tol {
                return Ok(self.finish(Termination::Converged));
            }
            if k >= cfg.max_iters {
                return Ok(self.finish(Termination::IterationCap));
            }

            let outcome = match cfg.method {
                Method::Gradient | Method::OpenLoopGradient => match cfg.step_rule {
                    StepRule::Armijo { .. } => self.armijo_step(&grad, -grad_sq, k),
                    StepRule::Constant { gamma } => self
                        .constant_step(self.curve.add_scaled(&grad, gamma), k)
                        .map(|(c, t, j)| (c, t, j, gamma)),
                },
                Method::Cg => {
                    let restart = match &cg {
                        None => true,
                        Some(mem) => {
                            let prev_sq = mem.grad.sq_norm();
                            cfg.cg_zero_rho
                                || mem.since_restart >= steps
                                || grad.dot(&mem.grad).abs() > cfg.cg_restart_threshold * prev_sq
                        }
                    };
                    let mut search = if restart {
                        grad.clone()
                    } else {
                        let mem = cg.as_ref().expect("checked above");
                        cg_direction(&grad, &mem.grad, &mem.dir)
                    };
                    // `grad` holds -grad J, so the directional derivative is -grad'search.
                    let mut slope = -grad.dot(&search);
                    let mut restarted = restart;
                    if !(slope < 0.0) {
                        search = grad.clone();
                        slope = -grad_sq;
                        restarted = true;
                    }
                    let since = if restarted { 1 } else { cg.as_ref().map_or(1, |m| m.since_restart + 1) };
                    let out = match cfg.step_rule {
                        StepRule::Armijo { .. } => self.armijo_step(&search, slope, k),
                        StepRule::Constant { gamma } => self
                            .constant_step(self.curve.add_scaled(&search, gamma), k)
                            .map(|(c, t, j)| (c, t, j, gamma)),
                    };
                    cg = Some(CgMemory {
                        grad: grad.clone(),
                        dir: search,
                        since_restart: since,
                    });
                    out
                }
                Method::HeavyBall => {
                    let gamma = self.gamma();
                    let momentum = self.curve.sub(&self.prev_curve);
                    let next = self
                        .curve
                        .add_scaled(&grad, gamma)
                        .add_scaled(&momentum, cfg.gamma_hb);
                    self.constant_step(next, k).map(|(c, t, j)| (c, t, j, gamma))
                }
                Method::Nesterov => {
                    let gamma = self.gamma();
                    let factor = k as f64 / (k as f64 + 3.0);
                    let aux = self
                        .curve
                        .add_scaled(&self.curve.sub(&self.prev_curve), factor);
                    let aux_grad = if k == 0 {
                        grad.clone()
                    } else {
                        match self.nesterov_aux_direction(&aux, k) {
                            Ok(d) => d,
                            Err(f) => return Err(self.fail(f)),
                        }
                    };
                    self.constant_step(aux.add_scaled(&aux_grad, gamma), k)
                        .map(|(c, t, j)| (c, t, j, gamma))
                }
            };
            let (curve, traj, cost, gamma) = match outcome {
                Ok(v) => v,
                Err(f) => {
                    self.log.set_last_step(0.0, self.diverged_trials.take());
                    return Err(self.fail(f));
                }
            };
            self.log.set_last_step(gamma, self.diverged_trials.take());
            self.prev_curve = std::mem::replace(&mut self.curve, curve);
            self.traj = traj;
            self.cost = cost;
        }
        unreachable!()
    }

    /// Projects the auxiliary curve and returns the descent direction of the
    /// reduced cost there.
    fn nesterov_aux_direction(&self, aux: &Curve, k: usize) -> Result<Curve, SolveFailure> {
        let (traj, _) = self
            .project(aux)
            .map_err(|source| SolveFailure::Diverged { iteration: k, source })?;
        let lin = linearize(&traj, self.problem.model, self.problem.cost);
        Ok(free_part(closed_loop_direction(&lin, &self.gains).to_curve()))
    }

    fn finish(self, termination: Termination) -> Solution {
        Solution {
            trajectory: self.traj,
            curve: self.curve,
            gains: self.gains,
            log: self.log,
            termination,
        }
    }
}
