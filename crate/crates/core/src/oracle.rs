//! Reference computations used to verify the solvers: finite differences of
//! the reduced cost and closed-form solutions of linear-quadratic instances.
//!
//! Nothing here shares a code path with the adjoint sweeps; the gradient
//! oracle only calls [`project`] and [`eval_cost`].

use std::ops::AddAssign;

use crate::error::Result;
use crate::models::LinearModel;
use crate::ocp::{eval_cost, CostModel, Curve, DynamicsModel, Matrix, QuadraticTrackingCost, Trajectory, Vector};
use crate::projection::{project, GainSchedule};

/// Reduced cost `J(alpha, mu) = l(P(alpha, mu))`.
pub fn reduced_cost(
    curve: &Curve,
    gains: &GainSchedule,
    x_init: &Vector,
    model: &dyn DynamicsModel,
    cost: &dyn CostModel,
) -> Result<f64> {
    eval_cost(&project(curve, gains, x_init, model)?, cost)
}

/// Central-difference gradient of the reduced cost over every curve
/// coordinate, with step `h_scale * (1 + |coordinate|)`.
pub fn fd_reduced_gradient(
    curve: &Curve,
    gains: &GainSchedule,
    x_init: &Vector,
    model: &dyn DynamicsModel,
    cost: &dyn CostModel,
    h_scale: f64,
) -> Result<Curve> {
    let mut grad = curve.scale(0.0);
    for i in 0..curve.dim() {
        let h = h_scale * (1.0 + curve.coord(i).abs());
        let mut plus = curve.clone();
        *plus.coord_mut(i) += h;
        let mut minus = curve.clone();
        *minus.coord_mut(i) -= h;
        let jp = reduced_cost(&plus, gains, x_init, model, cost)?;
        let jm = reduced_cost(&minus, gains, x_init, model, cost)?;
        *grad.coord_mut(i) = (jp - jm) / (2.0 * h);
    }
    Ok(grad)
}

/// Coordinatewise `|g - g_ref| / max(|g_ref|, 1)`, maximized over coordinates.
pub fn max_relative_error(grad: &Curve, reference: &Curve) -> f64 {
    (0..grad.dim())
        .map(|i| {
            let r = reference.coord(i);
            (grad.coord(i) - r).abs() / r.abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Exact minimizer of a linear-quadratic tracking problem computed with the
/// affine Riccati recursion (value function `x'Px + 2p'x + c`).
pub fn lqr_tracking_solution(
    model: &LinearModel,
    cost: &QuadraticTrackingCost,
    x_init: &Vector,
) -> Result<Trajectory> {
    let (a, b) = (model.a(), model.b());
    let (q, r) = (cost.q(), cost.r());
    let steps = cost.steps();
    let mut p = cost.qf().clone();
    let mut p_lin = -(cost.qf() * &cost.x_ref()[steps]);
    let mut feedback = vec![Matrix::zeros(0, 0); steps];
    let mut feedforward = vec![Vector::zeros(0); steps];
    for t in (0..steps).rev() {
        let s = r + b.transpose() * &p * b;
        let chol = s.cholesky().ok_or(crate::error::Error::Singular {
            what: "R + B'PB",
            timestep: t,
        })?;
        let k = chol.solve(&(b.transpose() * &p * a));
        let kff = chol.solve(&(r * &cost.u_ref()[t] - b.transpose() * &p_lin));
        let closed = a - b * &k;
        let next_lin = -(q * &cost.x_ref()[t]) - k.transpose() * r * (&kff - &cost.u_ref()[t])
            + closed.transpose() * (&p * b * &kff + &p_lin);
        let next_p = q + a.transpose() * &p * &closed;
        p = (&next_p + next_p.transpose()) * 0.5;
        p_lin = next_lin;
        feedback[t] = k;
        feedforward[t] = kff;
    }
    let mut xs = vec![x_init.clone()];
    let mut us = Vec::with_capacity(steps);
    for t in 0..steps {
        let u = &feedforward[t] - &feedback[t] * &xs[t];
        xs.push(a * &xs[t] + b * &u);
        us.push(u);
    }
    Trajectory::new(xs, us)
}

/// Same minimizer obtained by condensing the dynamics and solving the dense
/// normal equations in the stacked input vector.
pub fn lq_dense_solution(
    model: &LinearModel,
    cost: &QuadraticTrackingCost,
    x_init: &Vector,
) -> Result<Trajectory> {
    let (a, b) = (model.a(), model.b());
    let n = a.nrows();
    let m = b.ncols();
    let steps = cost.steps();
    // x_t = free_t + sum_{s<t} G_{t,s} u_s
    let mut free = vec![x_init.clone()];
    for t in 0..steps {
        free.push(a * &free[t]);
    }
    let mut blocks = vec![vec![Matrix::zeros(n, m); steps]; steps + 1];
    for t in 1..=steps {
        for s in 0..t {
            blocks[t][s] = if s + 1 == t {
                b.clone()
            } else {
                a * &blocks[t - 1][s]
            };
        }
    }
    let dim = steps * m;
    let mut hessian = Matrix::zeros(dim, dim);
    let mut rhs = Vector::zeros(dim);
    for t in 1..=steps {
        let w = if t == steps { cost.qf() } else { cost.q() };
        let mut g = Matrix::zeros(n, dim);
        for s in 0..t {
            g.view_mut((0, s * m), (n, m)).copy_from(&blocks[t][s]);
        }
        hessian += g.transpose() * w * &g;
        rhs += g.transpose() * w * (&cost.x_ref()[t] - &free[t]);
    }
    for t in 0..steps {
        hessian.view_mut((t * m, t * m), (m, m)).add_assign(cost.r());
        rhs.rows_mut(t * m, m).add_assign(cost.r() * &cost.u_ref()[t]);
    }
    let u = hessian
        .cholesky()
        .ok_or(crate::error::Error::Singular {
            what: "condensed Hessian",
            timestep: 0,
        })?
        .solve(&rhs);
    let us: Vec<Vector> = (0..steps).map(|t| u.rows(t * m, m).into_owned()).collect();
    let mut xs = vec![x_init.clone()];
    for t in 0..steps {
        xs.push(a * &xs[t] + b * &us[t]);
    }
    Trajectory::new(xs, us)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance() -> (LinearModel, QuadraticTrackingCost, Vector) {
        let model = LinearModel::new(
            Matrix::from_row_slice(2, 2, &[1.0, 0.1, -0.2, 0.95]),
            Matrix::from_row_slice(2, 1, &[0.0, 0.1]),
        )
        .unwrap();
        let steps = 15;
        let x_ref = (0..=steps)
            .map(|t| Vector::from_row_slice(&[(t as f64 * 0.3).sin(), 0.2]))
            .collect();
        let u_ref = (0..steps).map(|t| Vector::from_element(1, 0.1 * t as f64)).collect();
        let cost = QuadraticTrackingCost::new(
            Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
            Matrix::from_element(1, 1, 0.5),
            Matrix::identity(2, 2) * 5.0,
            x_ref,
            u_ref,
        )
        .unwrap();
        (model, cost, Vector::from_row_slice(&[1.0, -0.5]))
    }

    #[test]
    fn riccati_and_dense_solutions_agree() {
        let (model, cost, x0) = instance();
        let riccati = lqr_tracking_solution(&model, &cost, &x0).unwrap();
        let dense = lq_dense_solution(&model, &cost, &x0).unwrap();
        assert!(riccati.max_abs_diff(&dense) < 1e-10);
    }

    #[test]
    fn lq_solution_beats_perturbations() {
        let (model, cost, x0) = instance();
        let opt = lqr_tracking_solution(&model, &cost, &x0).unwrap();
        let j = eval_cost(&opt, &cost).unwrap();
        let gains = GainSchedule::zeros(15, 2, 1);
        for i in 0..15 {
            let mut curve = Curve::from_trajectory(&opt);
            curve.mu_mut()[i][0] += 1e-3;
            assert!(reduced_cost(&curve, &gains, &x0, &model, &cost).unwrap() > j);
        }
    }

    #[test]
    fn fd_gradient_exact_on_quadratic() {
        // Reduced cost of a linear model is quadratic: central differences
        // are exact up to rounding.
        let (model, cost, x0) = instance();
        let curve = Curve::constant(&x0, &Vector::from_element(1, 0.3), 15);
        let gains = GainSchedule::zeros(15, 2, 1);
        let g1 = fd_reduced_gradient(&curve, &gains, &x0, &model, &cost, 1e-3).unwrap();
        let g2 = fd_reduced_gradient(&curve, &gains, &x0, &model, &cost, 1e-5).unwrap();
        assert!(max_relative_error(&g1, &g2) < 1e-8);
    }
}
