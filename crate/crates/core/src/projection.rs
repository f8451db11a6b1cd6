//! The projection operator: closed-loop rollout of a curve through an affine
//! tracking law, mapping any curve onto the trajectory manifold.

use crate::error::{check_len, Error, Result};
use crate::ocp::{Curve, DynamicsModel, Matrix, Trajectory, Vector};

/// Rollouts whose state max-norm exceeds this are reported as divergent.
pub const DIVERGENCE_BOUND: f64 = 1e9;

/// Time-varying feedback gains `K_t` (each `m x n`).
#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule {
    gains: Vec<Matrix>,
}

impl GainSchedule {
    pub fn new(gains: Vec<Matrix>) -> Result<Self> {
        let Some(first) = gains.first() else {
            return Err(Error::InvalidHorizon {
                steps: 0,
                state_dim: 0,
                input_dim: 0,
            });
        };
        let (m, n) = first.shape();
        for (t, k) in gains.iter().enumerate() {
            check_len("gain rows", t, m, k.nrows())?;
            check_len("gain columns", t, n, k.ncols())?;
            if k.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "gains",
                    reason: format!("non-finite entry at timestep {t}"),
                });
            }
        }
        Ok(Self { gains })
    }

    /// All-zero gains: projection degenerates to an open-loop rollout of `mu`.
    pub fn zeros(steps: usize, state_dim: usize, input_dim: usize) -> Self {
        Self {
            gains: vec![Matrix::zeros(input_dim, state_dim); steps],
        }
    }

    pub fn gains(&self) -> &[Matrix] {
        &self.gains
    }

    pub fn steps(&self) -> usize {
        self.gains.len()
    }
}

/// Projects `curve` onto a trajectory:
/// `x_0 = x_init`, `u_t = mu_t + K_t (alpha_t - x_t)`, `x_{t+1} = f(x_t, u_t)`.
///
/// `alpha_0` is read like any other curve state, so curves whose first state
/// differs from `x_init` are accepted (finite-difference checks perturb it).
pub fn project(
    curve: &Curve,
    gains: &GainSchedule,
    x_init: &Vector,
    model: &dyn DynamicsModel,
) -> Result<Trajectory> {
    let steps = curve.steps();
    check_len("gain schedule", 0, steps, gains.steps())?;
    check_len("initial state", 0, model.state_dim(), x_init.len())?;
    check_len("curve state", 0, model.state_dim(), curve.state_dim())?;
    check_len("curve input", 0, model.input_dim(), curve.input_dim())?;
    check_len("gain rows", 0, model.input_dim(), gains.gains()[0].nrows())?;
    check_len("gain columns", 0, model.state_dim(), gains.gains()[0].ncols())?;

    let mut xs = Vec::with_capacity(steps + 1);
    let mut us = Vec::with_capacity(steps);
    xs.push(x_init.clone());
    for t in 0..steps {
        let x = &xs[t];
        let u = &curve.mu()[t] + &gains.gains()[t] * (&curve.alpha()[t] - x);
        let next = model.step(x, &u);
        let norm = next.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !(norm <= DIVERGENCE_BOUND) {
            return Err(Error::Divergence {
                timestep: t + 1,
                norm,
            });
        }
        us.push(u);
        xs.push(next);
    }
    Trajectory::new(xs, us)
}

/// `max_t ||x_{t+1} - f(x_t, u_t)||_inf`.
pub fn feasibility_residual(traj: &Trajectory, model: &dyn DynamicsModel) -> f64 {
    traj.u()
        .iter()
        .enumerate()
        .map(|(t, u)| (&traj.x()[t + 1] - model.step(&traj.x()[t], u)).amax())
        .fold(0.0, f64::max)
}
