//! Backward adjoint sweeps producing descent directions of the reduced cost.
//!
//! For a curve `(alpha, mu)`, gains `K` and the projected trajectory, the
//! closed-loop sweep returns `-grad_alpha J` and `-grad_mu J` of the reduced
//! cost `J(alpha, mu) = l(P(alpha, mu))`.

use crate::lqr::Linearization;
use crate::ocp::{Curve, Vector};
use crate::projection::GainSchedule;

/// Descent direction together with the costates that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentDirection {
    /// `-grad_{alpha_t} J`, `T` entries.
    pub d_alpha: Vec<Vector>,
    /// `-grad_{mu_t} J`, `T` entries.
    pub d_mu: Vec<Vector>,
    /// `lambda_0 .. lambda_T`.
    pub lambda: Vec<Vector>,
    /// `lambda~_t = b_t + B_t' lambda_{t+1}`, `T` entries.
    pub lambda_tilde: Vec<Vector>,
}

impl DescentDirection {
    pub fn grad_sq_norm(&self) -> f64 {
        self.d_alpha.iter().map(|v| v.norm_squared()).sum::<f64>()
            + self.d_mu.iter().map(|v| v.norm_squared()).sum::<f64>()
    }

    pub fn to_curve(&self) -> Curve {
        Curve::new(self.d_alpha.clone(), self.d_mu.clone())
            .expect("descent direction has consistent shapes")
    }
}

/// Closed-loop adjoint sweep:
///
/// ```text
/// lambda_T = grad l_T(x_T)
/// lambda_t = (A_t - B_t K_t)' lambda_{t+1} + a_t - K_t' b_t
/// d_mu_t   = -(b_t + B_t' lambda_{t+1})
/// d_alpha_t = K_t' d_mu_t
/// ```
pub fn closed_loop_direction(lin: &Linearization, gains: &GainSchedule) -> DescentDirection {
    assert_eq!(lin.steps(), gains.steps(), "linearization and gains disagree on T");
    let steps = lin.steps();
    let mut lambda = vec![Vector::zeros(0); steps + 1];
    let mut lambda_tilde = vec![Vector::zeros(0); steps];
    let mut d_alpha = vec![Vector::zeros(0); steps];
    let mut d_mu = vec![Vector::zeros(0); steps];
    lambda[steps] = lin.grad_terminal.clone();
    for t in (0..steps).rev() {
        let k = &gains.gains()[t];
        let (a, b) = (&lin.a[t], &lin.b[t]);
        let next = &lambda[t + 1];
        let tilde = &lin.grad_u[t] + b.tr_mul(next);
        // (A - BK)' l + a - K' b  ==  A' l + a - K' (b + B' l)
        lambda[t] = a.tr_mul(next) + &lin.grad_x[t] - k.tr_mul(&tilde);
        let dm = -&tilde;
        d_alpha[t] = k.tr_mul(&dm);
        d_mu[t] = dm;
        lambda_tilde[t] = tilde;
    }
    DescentDirection {
        d_alpha,
        d_mu,
        lambda,
        lambda_tilde,
    }
}

/// Open-loop adjoint sweep: `lambda_t = A_t' lambda_{t+1} + a_t`,
/// `du_t = -B_t' lambda_{t+1} - b_t`; `d_alpha` is zero.
pub fn open_loop_direction(lin: &Linearization) -> DescentDirection {
    let steps = lin.steps();
    let n = lin.state_dim();
    let mut lambda = vec![Vector::zeros(0); steps + 1];
    let mut lambda_tilde = vec![Vector::zeros(0); steps];
    let mut d_mu = vec![Vector::zeros(0); steps];
    lambda[steps] = lin.grad_terminal.clone();
    for t in (0..steps).rev() {
        let next = &lambda[t + 1];
        let tilde = &lin.grad_u[t] + lin.b[t].tr_mul(next);
        lambda[t] = lin.a[t].tr_mul(next) + &lin.grad_x[t];
        d_mu[t] = -&tilde;
        lambda_tilde[t] = tilde;
    }
    DescentDirection {
        d_alpha: vec![Vector::zeros(n); steps],
        d_mu,
        lambda,
        lambda_tilde,
    }
}

/// Hamiltonian stationarity residual `max_t ||b_t + B_t' lambda_{t+1}||_inf`.
pub fn pmp_residual(lin: &Linearization, dir: &DescentDirection) -> f64 {
    (0..lin.steps())
        .map(|t| (&lin.grad_u[t] + lin.b[t].tr_mul(&dir.lambda[t + 1])).amax())
        .fold(0.0, f64::max)
}
