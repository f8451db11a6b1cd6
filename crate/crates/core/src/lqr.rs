//! Linearization about a trajectory and time-varying LQR gain synthesis.

use crate::error::{check_len, Error, Result};
use crate::ocp::{CostModel, Curve, DynamicsModel, Matrix, Trajectory, Vector};
use crate::projection::GainSchedule;

/// Dynamics Jacobians and cost gradients along a trajectory.
///
/// `a[t]`, `b[t]` are stored in standard orientation (`dx_{t+1} = A dx + B du`);
/// adjoint recursions transpose them.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub a: Vec<Matrix>,
    pub b: Vec<Matrix>,
    /// `grad_x l_t(x_t, u_t)`.
    pub grad_x: Vec<Vector>,
    /// `grad_u l_t(x_t, u_t)`.
    pub grad_u: Vec<Vector>,
    /// `grad l_T(x_T)`.
    pub grad_terminal: Vector,
}

impl Linearization {
    pub fn steps(&self) -> usize {
        self.a.len()
    }

    pub fn state_dim(&self) -> usize {
        self.grad_terminal.len()
    }

    pub fn input_dim(&self) -> usize {
        self.b[0].ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let steps = self.a.len();
        if steps == 0 {
            return Err(Error::InvalidHorizon {
                steps,
                state_dim: self.grad_terminal.len(),
                input_dim: 0,
            });
        }
        check_len("linearization B", 0, steps, self.b.len())?;
        check_len("linearization grad_x", 0, steps, self.grad_x.len())?;
        check_len("linearization grad_u", 0, steps, self.grad_u.len())?;
        let n = self.state_dim();
        let m = self.input_dim();
        for t in 0..steps {
            check_len("A rows", t, n, self.a[t].nrows())?;
            check_len("A columns", t, n, self.a[t].ncols())?;
            check_len("B rows", t, n, self.b[t].nrows())?;
            check_len("B columns", t, m, self.b[t].ncols())?;
            check_len("grad_x", t, n, self.grad_x[t].len())?;
            check_len("grad_u", t, m, self.grad_u[t].len())?;
        }
        Ok(())
    }
}

/// Linearizes dynamics and cost about `traj`.
pub fn linearize(traj: &Trajectory, model: &dyn DynamicsModel, cost: &dyn CostModel) -> Linearization {
    let steps = traj.steps();
    let mut a = Vec::with_capacity(steps);
    let mut b = Vec::with_capacity(steps);
    let mut grad_x = Vec::with_capacity(steps);
    let mut grad_u = Vec::with_capacity(steps);
    for t in 0..steps {
        let (x, u) = (&traj.x()[t], &traj.u()[t]);
        let (at, bt) = model.jacobians(x, u);
        a.push(at);
        b.push(bt);
        grad_x.push(cost.grad_stage_x(t, x, u));
        grad_u.push(cost.grad_stage_u(t, x, u));
    }
    Linearization {
        a,
        b,
        grad_x,
        grad_u,
        grad_terminal: cost.grad_terminal(&traj.x()[steps]),
    }
}

/// Dynamics Jacobians at the points of a (possibly infeasible) curve. Used to
/// seed gains before any trajectory exists.
pub fn curve_jacobians(curve: &Curve, model: &dyn DynamicsModel) -> (Vec<Matrix>, Vec<Matrix>) {
    curve
        .alpha()
        .iter()
        .zip(curve.mu())
        .map(|(x, u)| model.jacobians(x, u))
        .unzip()
}

/// Weights of the regulator problem solved to obtain the feedback gains.
#[derive(Debug, Clone, PartialEq)]
pub struct RegulatorWeights {
    pub q: Matrix,
    pub r: Matrix,
    pub qf: Matrix,
}

/// One backward Riccati step. Returns `(K, P)` for the given `P_{t+1}`.
pub fn riccati_step(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    p_next: &Matrix,
    timestep: usize,
) -> Result<(Matrix, Matrix)> {
    let bt_p = b.transpose() * p_next;
    let s = r + &bt_p * b;
    let chol = s.cholesky().ok_or(Error::Singular {
        what: "R + B'PB",
        timestep,
    })?;
    let k = chol.solve(&(&bt_p * a));
    let p = q + a.transpose() * p_next * (a - b * &k);
    let p = (&p + p.transpose()) * 0.5;
    Ok((k, p))
}

/// Time-varying LQR gains for `(A_t, B_t)` with the given weights.
pub fn riccati_gains(
    a: &[Matrix],
    b: &[Matrix],
    weights: &RegulatorWeights,
) -> Result<GainSchedule> {
    check_len("riccati B", 0, a.len(), b.len())?;
    let mut p = weights.qf.clone();
    let mut gains = vec![Matrix::zeros(0, 0); a.len()];
    for t in (0..a.len()).rev() {
        let (k, p_t) = riccati_step(&a[t], &b[t], &weights.q, &weights.r, &p, t)?;
        gains[t] = k;
        p = p_t;
    }
    GainSchedule::new(gains)
}

/// Convenience wrapper taking the Jacobians from a [`Linearization`].
pub fn riccati_gains_for(lin: &Linearization, weights: &RegulatorWeights) -> Result<GainSchedule> {
    riccati_gains(&lin.a, &lin.b, weights)
}

pub const DARE_TOL: f64 = 1e-10;
pub const DARE_MAX_ITERS: usize = 100_000;

/// Stabilizing solution of the discrete algebraic Riccati equation, obtained
/// by iterating the backward Riccati step from `P = Q` to a fixed point.
pub fn dare_terminal_weight(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    let mut p = q.clone();
    let mut change = f64::INFINITY;
    for _ in 0..DARE_MAX_ITERS {
        let (_, next) = riccati_step(a, b, q, r, &p, 0)?;
        change = (&next - &p).amax();
        p = next;
        if change <= DARE_TOL {
            return Ok(p);
        }
        if !change.is_finite() {
            break;
        }
    }
    Err(Error::RiccatiNotConverged {
        iterations: DARE_MAX_ITERS,
        change,
    })
}
