use proptest::prelude::*;

use trajopt_core::costate::{closed_loop_direction, open_loop_direction};
use trajopt_core::lqr::linearize;
use trajopt_core::models::{pendulum_field, rk4_discretize, LinearModel, PendulumParams};
use trajopt_core::ocp::{eval_cost, Curve, Matrix, QuadraticTrackingCost, Vector};
use trajopt_core::oracle::{fd_reduced_gradient, max_relative_error};
use trajopt_core::projection::{feasibility_residual, project, GainSchedule};
use trajopt_core::solvers::{armijo_search, ArmijoParams};

fn vec_of(len: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(lo..hi, len)
}

fn curve_from(steps: usize, n: usize, m: usize, v: &[f64]) -> Curve {
    let alpha = (0..steps).map(|t| Vector::from_row_slice(&v[t * n..(t + 1) * n])).collect();
    let off = steps * n;
    let mu = (0..steps)
        .map(|t| Vector::from_row_slice(&v[off + t * m..off + (t + 1) * m]))
        .collect();
    Curve::new(alpha, mu).unwrap()
}

fn gains_from(steps: usize, n: usize, m: usize, v: &[f64]) -> GainSchedule {
    GainSchedule::new(
        (0..steps)
            .map(|t| Matrix::from_row_slice(m, n, &v[t * n * m..(t + 1) * n * m]))
            .collect(),
    )
    .unwrap()
}

/// Random pendulum problem pieces: (steps, curve values, gain values).
fn pendulum_case() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (2usize..30).prop_flat_map(|steps| (Just(steps), vec_of(3 * steps, -1.0, 1.0), vec_of(2 * steps, -3.0, 3.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_output_is_feasible_and_idempotent((steps, c, k) in pendulum_case(), k2 in vec_of(60, -3.0, 3.0)) {
        let model = rk4_discretize(pendulum_field(PendulumParams::default()).unwrap(), 0.025, 1).unwrap();
        let x0 = Vector::from_row_slice(&[c[0], c[1]]);
        let curve = curve_from(steps, 2, 1, &c);
        let traj = project(&curve, &gains_from(steps, 2, 1, &k), &x0, &model).unwrap();
        prop_assert!(feasibility_residual(&traj, &model) <= 1e-12);
        // A trajectory is fixed by the projection whatever the gains.
        let again = project(&Curve::from_trajectory(&traj), &gains_from(steps, 2, 1, &k2), &x0, &model).unwrap();
        prop_assert!(again.max_abs_diff(&traj) <= 1e-12);
    }

    #[test]
    fn zero_gain_sweep_is_the_open_loop_sweep((steps, c, _k) in pendulum_case()) {
        let model = rk4_discretize(pendulum_field(PendulumParams::default()).unwrap(), 0.025, 1).unwrap();
        let x0 = Vector::zeros(2);
        let curve = curve_from(steps, 2, 1, &c);
        let zero = GainSchedule::zeros(steps, 2, 1);
        let traj = project(&curve, &zero, &x0, &model).unwrap();
        let cost = QuadraticTrackingCost::new(
            Matrix::identity(2, 2),
            Matrix::identity(1, 1),
            Matrix::identity(2, 2) * 3.0,
            vec![Vector::from_row_slice(&[0.5, 0.0]); steps + 1],
            vec![Vector::zeros(1); steps],
        ).unwrap();
        let lin = linearize(&traj, &model, &cost);
        let closed = closed_loop_direction(&lin, &zero);
        let open = open_loop_direction(&lin);
        prop_assert_eq!(closed.d_mu, open.d_mu);
        prop_assert_eq!(closed.lambda, open.lambda);
        prop_assert!(closed.d_alpha.iter().all(|d| d.amax() == 0.0));
    }

    #[test]
    fn adjoint_gradient_matches_differences_on_linear_systems(
        steps in 2usize..12,
        a in vec_of(4, -1.2, 1.2),
        b in vec_of(2, -1.0, 1.0),
        c in vec_of(36, -2.0, 2.0),
        k in vec_of(24, -1.0, 1.0),
        q in vec_of(3, 0.1, 3.0),
    ) {
        let model = LinearModel::new(Matrix::from_row_slice(2, 2, &a), Matrix::from_row_slice(2, 1, &b)).unwrap();
        let x0 = Vector::from_row_slice(&[c[0], c[1]]);
        let curve = curve_from(steps, 2, 1, &c);
        let gains = gains_from(steps, 2, 1, &k);
        let cost = QuadraticTrackingCost::new(
            Matrix::from_diagonal(&Vector::from_row_slice(&[q[0], q[1]])),
            Matrix::from_element(1, 1, q[2]),
            Matrix::identity(2, 2),
            (0..=steps).map(|t| Vector::from_row_slice(&[(t as f64).cos(), 0.1 * t as f64])).collect(),
            vec![Vector::from_element(1, 0.3); steps],
        ).unwrap();
        let traj = project(&curve, &gains, &x0, &model).unwrap();
        let lin = linearize(&traj, &model, &cost);
        let grad = closed_loop_direction(&lin, &gains).to_curve().scale(-1.0);
        let reference = fd_reduced_gradient(&curve, &gains, &x0, &model, &cost, 1e-5).unwrap();
        // The reduced cost is quadratic, so central differences are exact up to rounding.
        let scale = reference.sq_norm().sqrt().max(1.0);
        prop_assert!(max_relative_error(&grad, &reference) <= 1e-6 * scale);
    }

    #[test]
    fn cost_vanishes_only_on_the_reference(steps in 1usize..10, v in vec_of(30, -2.0, 2.0)) {
        let x_ref: Vec<Vector> = (0..=steps).map(|t| Vector::from_row_slice(&[v[2 * t], v[2 * t + 1]])).collect();
        let u_ref: Vec<Vector> = (0..steps).map(|t| Vector::from_element(1, v[t + 2 * steps + 2])).collect();
        let cost = QuadraticTrackingCost::new(
            Matrix::identity(2, 2),
            Matrix::identity(1, 1),
            Matrix::identity(2, 2),
            x_ref.clone(),
            u_ref.clone(),
        ).unwrap();
        let on_ref = trajopt_core::ocp::Trajectory::new(x_ref.clone(), u_ref.clone()).unwrap();
        prop_assert_eq!(eval_cost(&on_ref, &cost).unwrap(), 0.0);
        let mut xs = x_ref;
        xs[steps][0] += 0.5;
        let off = trajopt_core::ocp::Trajectory::new(xs, u_ref).unwrap();
        prop_assert!(eval_cost(&off, &cost).unwrap() > 0.0);
    }

    #[test]
    fn armijo_accepts_first_sufficient_decrease(
        weights in vec_of(6, 0.1, 50.0),
        start in vec_of(6, -3.0, 3.0),
        gamma0 in 0.01f64..4.0,
        beta in 0.2f64..0.9,
    ) {
        prop_assume!(start.iter().any(|s| s.abs() > 1e-3));
        let f = |c: &Curve| Some((0..6).map(|i| weights[i] * c.mu()[i][0].powi(2)).sum::<f64>());
        let base = Curve::new(vec![Vector::zeros(0); 6], start.iter().map(|&s| Vector::from_element(1, s)).collect()).unwrap();
        let grad = Curve::new(
            vec![Vector::zeros(0); 6],
            (0..6).map(|i| Vector::from_element(1, 2.0 * weights[i] * start[i])).collect(),
        ).unwrap();
        let dir = grad.scale(-1.0);
        let slope = grad.dot(&dir);
        let params = ArmijoParams { gamma0, beta, ..ArmijoParams::default() };
        let base_cost = f(&base).unwrap();
        let step = armijo_search(f, &base, base_cost, &dir, slope, &params).unwrap();
        prop_assert!(step.cost <= base_cost + params.slope * step.gamma * slope);
        if step.backtracks > 0 {
            let longer = step.gamma / beta;
            let rejected = f(&base.add_scaled(&dir, longer)).unwrap();
            prop_assert!(rejected > base_cost + params.slope * longer * slope);
        }
    }
}
