//! Problem-instance data model: horizon, curves, trajectories and the
//! dynamics/cost contracts every solver is written against.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Number of control steps `T` together with the state and input dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Horizon {
    steps: usize,
    state_dim: usize,
    input_dim: usize,
}

impl Horizon {
    pub fn new(steps: usize, state_dim: usize, input_dim: usize) -> Result<Self> {
        if steps == 0 || state_dim == 0 || input_dim == 0 {
            return Err(Error::InvalidHorizon {
                steps,
                state_dim,
                input_dim,
            });
        }
        Ok(Self {
            steps,
            state_dim,
            input_dim,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }
}

/// A state-input curve `(alpha, mu)`: `T` states `alpha_0..alpha_{T-1}` and
/// `T` inputs `mu_0..mu_{T-1}`. A curve need not satisfy the dynamics.
///
/// The same shape doubles as a tangent vector (descent directions, momentum
/// terms), so the arithmetic helpers below operate elementwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    alpha: Vec<Vector>,
    mu: Vec<Vector>,
}

impl Curve {
    pub fn new(alpha: Vec<Vector>, mu: Vec<Vector>) -> Result<Self> {
        check_len("curve length", 0, alpha.len(), mu.len())?;
        if alpha.is_empty() {
            return Err(Error::InvalidHorizon {
                steps: 0,
                state_dim: 0,
                input_dim: 0,
            });
        }
        let n = alpha[0].len();
        let m = mu[0].len();
        for (t, (a, u)) in alpha.iter().zip(&mu).enumerate() {
            check_len("curve alpha", t, n, a.len())?;
            check_len("curve mu", t, m, u.len())?;
        }
        Ok(Self { alpha, mu })
    }

    /// Constant curve `alpha_t = x`, `mu_t = u` for all `t`.
    pub fn constant(x: &Vector, u: &Vector, steps: usize) -> Self {
        Self {
            alpha: vec![x.clone(); steps],
            mu: vec![u.clone(); steps],
        }
    }

    pub fn zeros(horizon: &Horizon) -> Self {
        Self::constant(
            &Vector::zeros(horizon.state_dim()),
            &Vector::zeros(horizon.input_dim()),
            horizon.steps(),
        )
    }

    /// Reinterprets a trajectory as a curve, dropping the terminal state.
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        Self {
            alpha: traj.x[..traj.steps()].to_vec(),
            mu: traj.u.clone(),
        }
    }

    pub fn alpha(&self) -> &[Vector] {
        &self.alpha
    }

    pub fn mu(&self) -> &[Vector] {
        &self.mu
    }

    pub fn alpha_mut(&mut self) -> &mut [Vector] {
        &mut self.alpha
    }

    pub fn mu_mut(&mut self) -> &mut [Vector] {
        &mut self.mu
    }

    pub fn steps(&self) -> usize {
        self.mu.len()
    }

    pub fn state_dim(&self) -> usize {
        self.alpha[0].len()
    }

    pub fn input_dim(&self) -> usize {
        self.mu[0].len()
    }

    /// Number of scalar coordinates, `T * (n + m)`.
    pub fn dim(&self) -> usize {
        self.steps() * (self.state_dim() + self.input_dim())
    }

    /// `self + gamma * other`.
    pub fn add_scaled(&self, other: &Curve, gamma: f64) -> Curve {
        Curve {
            alpha: self
                .alpha
                .iter()
                .zip(&other.alpha)
                .map(|(a, d)| a + d * gamma)
                .collect(),
            mu: self
                .mu
                .iter()
                .zip(&other.mu)
                .map(|(a, d)| a + d * gamma)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Curve) -> Curve {
        self.add_scaled(other, -1.0)
    }

    pub fn scale(&self, factor: f64) -> Curve {
        Curve {
            alpha: self.alpha.iter().map(|a| a * factor).collect(),
            mu: self.mu.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn dot(&self, other: &Curve) -> f64 {
        let a: f64 = self.alpha.iter().zip(&other.alpha).map(|(a, b)| a.dot(b)).sum();
        let m: f64 = self.mu.iter().zip(&other.mu).map(|(a, b)| a.dot(b)).sum();
        a + m
    }

    pub fn sq_norm(&self) -> f64 {
        self.dot(self)
    }

    pub fn max_abs_diff(&self, other: &Curve) -> f64 {
        max_abs_diff(&self.alpha, &other.alpha).max(max_abs_diff(&self.mu, &other.mu))
    }

    /// Reads coordinate `i` of the stacked vector `(alpha_0, .., alpha_{T-1}, mu_0, .., mu_{T-1})`.
    pub fn coord(&self, i: usize) -> f64 {
        let (n, m) = (self.state_dim(), self.input_dim());
        let na = self.steps() * n;
        if i < na {
            self.alpha[i / n][i % n]
        } else {
            let j = i - na;
            self.mu[j / m][j % m]
        }
    }

    pub fn coord_mut(&mut self, i: usize) -> &mut f64 {
        let (n, m) = (self.state_dim(), self.input_dim());
        let na = self.steps() * n;
        if i < na {
            &mut self.alpha[i / n][i % n]
        } else {
            let j = i - na;
            &mut self.mu[j / m][j % m]
        }
    }
}

/// A dynamically feasible state-input pair: `T + 1` states and `T` inputs with
/// `x_{t+1} = f(x_t, u_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    x: Vec<Vector>,
    u: Vec<Vector>,
}

impl Trajectory {
    /// Validates shapes only; dynamic feasibility is checked with
    /// [`crate::projection::feasibility_residual`].
    pub fn new(x: Vec<Vector>, u: Vec<Vector>) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::InvalidHorizon {
                steps: 0,
                state_dim: x.first().map_or(0, |v| v.len()),
                input_dim: 0,
            });
        }
        check_len("trajectory states", 0, u.len() + 1, x.len())?;
        let n = x[0].len();
        let m = u[0].len();
        for (t, xt) in x.iter().enumerate() {
            check_len("trajectory state", t, n, xt.len())?;
        }
        for (t, ut) in u.iter().enumerate() {
            check_len("trajectory input", t, m, ut.len())?;
        }
        Ok(Self { x, u })
    }

    pub fn x(&self) -> &[Vector] {
        &self.x
    }

    pub fn u(&self) -> &[Vector] {
        &self.u
    }

    pub fn steps(&self) -> usize {
        self.u.len()
    }

    pub fn state_dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn input_dim(&self) -> usize {
        self.u[0].len()
    }

    pub fn into_parts(self) -> (Vec<Vector>, Vec<Vector>) {
        (self.x, self.u)
    }

    /// Max-norm distance over all states and inputs.
    pub fn max_abs_diff(&self, other: &Trajectory) -> f64 {
        max_abs_diff(&self.x, &other.x).max(max_abs_diff(&self.u, &other.u))
    }

    pub fn max_input_diff(&self, other: &Trajectory) -> f64 {
        max_abs_diff(&self.u, &other.u)
    }
}

fn max_abs_diff(a: &[Vector], b: &[Vector]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).amax())
        .fold(0.0, f64::max)
}

/// Discrete-time dynamics `x_{t+1} = f(x_t, u_t)` with its Jacobians.
///
/// Jacobians are returned in standard orientation: `A = df/dx` (n x n) and
/// `B = df/du` (n x m), so that `dx_{t+1} = A dx_t + B du_t`.
pub trait DynamicsModel: Send + Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn step(&self, x: &Vector, u: &Vector) -> Vector;
    fn jacobians(&self, x: &Vector, u: &Vector) -> (Matrix, Matrix);

    fn jac_x(&self, x: &Vector, u: &Vector) -> Matrix {
        self.jacobians(x, u).0
    }

    fn jac_u(&self, x: &Vector, u: &Vector) -> Matrix {
        self.jacobians(x, u).1
    }
}

/// Stage and terminal costs with their gradients.
pub trait CostModel: Send + Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// Horizon length `T` the cost is defined over.
    fn steps(&self) -> usize;
    fn stage(&self, t: usize, x: &Vector, u: &Vector) -> f64;
    fn terminal(&self, x: &Vector) -> f64;
    fn grad_stage_x(&self, t: usize, x: &Vector, u: &Vector) -> Vector;
    fn grad_stage_u(&self, t: usize, x: &Vector, u: &Vector) -> Vector;
    fn grad_terminal(&self, x: &Vector) -> Vector;
}

/// `sum_t ||x_t - x_ref,t||_Q^2 + ||u_t - u_ref,t||_R^2 + ||x_T - x_ref,T||_Qf^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTrackingCost {
    q: Matrix,
    r: Matrix,
    qf: Matrix,
    x_ref: Vec<Vector>,
    u_ref: Vec<Vector>,
}

const SYMMETRY_TOL: f64 = 1e-12;

fn check_symmetric(name: &'static str, m: &Matrix, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("expected {dim}x{dim}, got {}x{}", m.nrows(), m.ncols()),
        });
    }
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("not symmetric (max asymmetry {asym:e})"),
        });
    }
    Ok(())
}

impl QuadraticTrackingCost {
    pub fn new(
        q: Matrix,
        r: Matrix,
        qf: Matrix,
        x_ref: Vec<Vector>,
        u_ref: Vec<Vector>,
    ) -> Result<Self> {
        let n = q.nrows();
        let m = r.nrows();
        check_symmetric("Q", &q, n)?;
        check_symmetric("R", &r, m)?;
        check_symmetric("Qf", &qf, n)?;
        if r.clone().cholesky().is_none() {
            return Err(Error::InvalidParameter {
                name: "R",
                reason: "not positive definite".into(),
            });
        }
        if u_ref.is_empty() {
            return Err(Error::InvalidHorizon {
                steps: 0,
                state_dim: n,
                input_dim: m,
            });
        }
        check_len("reference states", 0, u_ref.len() + 1, x_ref.len())?;
        for (t, x) in x_ref.iter().enumerate() {
            check_len("state reference", t, n, x.len())?;
        }
        for (t, u) in u_ref.iter().enumerate() {
            check_len("input reference", t, m, u.len())?;
        }
        Ok(Self {
            q,
            r,
            qf,
            x_ref,
            u_ref,
        })
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn qf(&self) -> &Matrix {
        &self.qf
    }

    pub fn x_ref(&self) -> &[Vector] {
        &self.x_ref
    }

    pub fn u_ref(&self) -> &[Vector] {
        &self.u_ref
    }
}

fn quad_form(m: &Matrix, v: &Vector) -> f64 {
    v.dot(&(m * v))
}

impl CostModel for QuadraticTrackingCost {
    fn state_dim(&self) -> usize {
        self.q.nrows()
    }

    fn input_dim(&self) -> usize {
        self.r.nrows()
    }

    fn steps(&self) -> usize {
        self.u_ref.len()
    }

    fn stage(&self, t: usize, x: &Vector, u: &Vector) -> f64 {
        quad_form(&self.q, &(x - &self.x_ref[t])) + quad_form(&self.r, &(u - &self.u_ref[t]))
    }

    fn terminal(&self, x: &Vector) -> f64 {
        quad_form(&self.qf, &(x - &self.x_ref[self.steps()]))
    }

    fn grad_stage_x(&self, t: usize, x: &Vector, _u: &Vector) -> Vector {
        (&self.q * (x - &self.x_ref[t])) * 2.0
    }

    fn grad_stage_u(&self, t: usize, _x: &Vector, u: &Vector) -> Vector {
        (&self.r * (u - &self.u_ref[t])) * 2.0
    }

    fn grad_terminal(&self, x: &Vector) -> Vector {
        (&self.qf * (x - &self.x_ref[self.steps()])) * 2.0
    }
}

/// Total cost `sum_t l_t(x_t, u_t) + l_T(x_T)` of a trajectory.
pub fn eval_cost(traj: &Trajectory, cost: &dyn CostModel) -> Result<f64> {
    check_len("cost horizon", 0, cost.steps(), traj.steps())?;
    for (t, x) in traj.x().iter().enumerate() {
        check_len("state", t, cost.state_dim(), x.len())?;
    }
    for (t, u) in traj.u().iter().enumerate() {
        check_len("input", t, cost.input_dim(), u.len())?;
    }
    let stage: f64 = traj
        .u()
        .iter()
        .enumerate()
        .map(|(t, u)| cost.stage(t, &traj.x()[t], u))
        .sum();
    Ok(stage + cost.terminal(&traj.x()[traj.steps()]))
}

/// Step reference: `(x_i, u_i)` for `t < switch_index`, `(x_f, u_f)` afterwards.
/// Returns `T + 1` state references and `T` input references.
pub fn make_step_reference(
    horizon: &Horizon,
    x_initial: &Vector,
    u_initial: &Vector,
    x_final: &Vector,
    u_final: &Vector,
    switch_index: usize,
) -> Result<(Vec<Vector>, Vec<Vector>)> {
    let steps = horizon.steps();
    if switch_index > steps {
        return Err(Error::SwitchIndexOutOfRange {
            index: switch_index,
            steps,
        });
    }
    check_len("initial state reference", 0, horizon.state_dim(), x_initial.len())?;
    check_len("final state reference", 0, horizon.state_dim(), x_final.len())?;
    check_len("initial input reference", 0, horizon.input_dim(), u_initial.len())?;
    check_len("final input reference", 0, horizon.input_dim(), u_final.len())?;
    let pick = |t: usize| t < switch_index;
    let x_ref = (0..=steps)
        .map(|t| if pick(t) { x_initial } else { x_final }.clone())
        .collect();
    let u_ref = (0..steps)
        .map(|t| if pick(t) { u_initial } else { u_final }.clone())
        .collect();
    Ok((x_ref, u_ref))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Vector {
        Vector::from_element(1, v)
    }

    fn unit_cost(steps: usize) -> QuadraticTrackingCost {
        QuadraticTrackingCost::new(
            Matrix::identity(1, 1),
            Matrix::identity(1, 1),
            Matrix::identity(1, 1),
            vec![scalar(0.0); steps + 1],
            vec![scalar(0.0); steps],
        )
        .unwrap()
    }

    #[test]
    fn horizon_rejects_zero_dims() {
        assert!(Horizon::new(0, 1, 1).is_err());
        assert!(Horizon::new(1, 0, 1).is_err());
        assert!(Horizon::new(1, 1, 0).is_err());
        assert!(Horizon::new(1, 1, 1).is_ok());
    }

    #[test]
    fn cost_of_zero_trajectory_is_zero() {
        let q = Matrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let cost = QuadraticTrackingCost::new(
            q.clone(),
            Matrix::identity(1, 1) * 0.5,
            q * 4.0,
            vec![Vector::zeros(2); 4],
            vec![Vector::zeros(1); 3],
        )
        .unwrap();
        let traj = Trajectory::new(vec![Vector::zeros(2); 4], vec![Vector::zeros(1); 3]).unwrap();
        assert_eq!(eval_cost(&traj, &cost).unwrap(), 0.0);
    }

    #[test]
    fn cost_hand_evaluation() {
        let traj = Trajectory::new(vec![scalar(1.0), scalar(1.0)], vec![scalar(1.0)]).unwrap();
        assert_eq!(eval_cost(&traj, &unit_cost(1)).unwrap(), 3.0);
    }

    #[test]
    fn cost_on_reference_is_zero() {
        let x_ref: Vec<Vector> = (0..4).map(|t| Vector::from_vec(vec![t as f64, -1.0])).collect();
        let u_ref: Vec<Vector> = (0..3).map(|t| scalar(0.3 * t as f64)).collect();
        let cost = QuadraticTrackingCost::new(
            Matrix::identity(2, 2),
            Matrix::identity(1, 1),
            Matrix::identity(2, 2),
            x_ref.clone(),
            u_ref.clone(),
        )
        .unwrap();
        let traj = Trajectory::new(x_ref, u_ref).unwrap();
        assert_eq!(eval_cost(&traj, &cost).unwrap(), 0.0);
    }

    #[test]
    fn cost_dimension_mismatch_names_index() {
        let traj = Trajectory::new(
            vec![scalar(0.0), Vector::zeros(1)],
            vec![Vector::zeros(2)],
        )
        .unwrap();
        let err = eval_cost(&traj, &unit_cost(1)).unwrap_err();
        assert!(matches!(err, Error::Dimension { what: "input", index: 0, .. }));
    }

    #[test]
    fn rejects_asymmetric_or_indefinite_weights() {
        let bad_q = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(QuadraticTrackingCost::new(
            bad_q,
            Matrix::identity(1, 1),
            Matrix::identity(2, 2),
            vec![Vector::zeros(2); 2],
            vec![Vector::zeros(1); 1],
        )
        .is_err());
        assert!(QuadraticTrackingCost::new(
            Matrix::identity(1, 1),
            Matrix::zeros(1, 1),
            Matrix::identity(1, 1),
            vec![scalar(0.0); 2],
            vec![scalar(0.0); 1],
        )
        .is_err());
    }

    #[test]
    fn step_reference_switching() {
        let h = Horizon::new(4, 1, 1).unwrap();
        let (xr, ur) =
            make_step_reference(&h, &scalar(0.0), &scalar(0.0), &scalar(2.0), &scalar(-1.0), 0)
                .unwrap();
        assert!(xr.iter().all(|x| x[0] == 2.0));
        assert!(ur.iter().all(|u| u[0] == -1.0));
        assert_eq!(xr.len(), 5);
        assert_eq!(ur.len(), 4);

        let (xr, ur) =
            make_step_reference(&h, &scalar(0.0), &scalar(0.0), &scalar(2.0), &scalar(-1.0), 2)
                .unwrap();
        assert_eq!(xr.iter().map(|x| x[0]).collect::<Vec<_>>(), [0.0, 0.0, 2.0, 2.0, 2.0]);
        assert_eq!(ur.iter().map(|u| u[0]).collect::<Vec<_>>(), [0.0, 0.0, -1.0, -1.0]);

        assert!(matches!(
            make_step_reference(&h, &scalar(0.0), &scalar(0.0), &scalar(2.0), &scalar(-1.0), 5),
            Err(Error::SwitchIndexOutOfRange { index: 5, steps: 4 })
        ));
    }

    #[test]
    fn pendulum_equilibrium_input() {
        // u_f = -M g l sin(0.5) for M = l = 1, g = 9.81
        let u_f = -9.81 * 0.5f64.sin();
        assert!((u_f - (-4.703_164_5)).abs() < 1e-7);
    }

    #[test]
    fn gradients_match_central_differences() {
        let q = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let r = Matrix::from_row_slice(1, 1, &[0.7]);
        let cost = QuadraticTrackingCost::new(
            q.clone(),
            r,
            q * 3.0,
            vec![Vector::from_vec(vec![0.2, -0.4]); 3],
            vec![scalar(0.1); 2],
        )
        .unwrap();
        let x = Vector::from_vec(vec![0.7, -1.3]);
        let u = scalar(2.1);
        let gx = cost.grad_stage_x(1, &x, &u);
        let gu = cost.grad_stage_u(1, &x, &u);
        let gt = cost.grad_terminal(&x);
        for i in 0..2 {
            let h = 1e-6 * (1.0 + x[i].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (cost.stage(1, &xp, &u) - cost.stage(1, &xm, &u)) / (2.0 * h);
            assert!((fd - gx[i]).abs() <= 1e-5 * gx[i].abs().max(1.0));
            let fd = (cost.terminal(&xp) - cost.terminal(&xm)) / (2.0 * h);
            assert!((fd - gt[i]).abs() <= 1e-5 * gt[i].abs().max(1.0));
        }
        let h = 1e-6 * (1.0 + u[0].abs());
        let fd = (cost.stage(1, &x, &scalar(u[0] + h)) - cost.stage(1, &x, &scalar(u[0] - h)))
            / (2.0 * h);
        assert!((fd - gu[0]).abs() <= 1e-5 * gu[0].abs().max(1.0));
    }
}
