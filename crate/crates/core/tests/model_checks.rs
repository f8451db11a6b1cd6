use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trajopt_core::costate::closed_loop_direction;
use trajopt_core::lqr::{curve_jacobians, linearize, riccati_gains, RegulatorWeights};
use trajopt_core::models::fd::max_relative_error as matrix_rel_error;
use trajopt_core::models::{
    cart_train_field, fd_jacobian, pendulum_field, rk4_discretize, CartTrainParams, PendulumCoupling,
    PendulumParams,
};
use trajopt_core::ocp::{make_step_reference, Curve, DynamicsModel, Horizon, Matrix, QuadraticTrackingCost, Vector};
use trajopt_core::oracle::{fd_reduced_gradient, max_relative_error};
use trajopt_core::projection::project;

fn random_vector(rng: &mut ChaCha8Rng, len: usize, bound: f64) -> Vector {
    Vector::from_fn(len, |_, _| rng.random_range(-bound..bound))
}

fn check_jacobians(model: &dyn DynamicsModel, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = random_vector(&mut rng, model.state_dim(), 1.0);
        let u = random_vector(&mut rng, model.input_dim(), 5.0);
        let (a, b) = model.jacobians(&x, &u);
        let (fa, fb) = fd_jacobian(model, &x, &u, 1e-6);
        worst = worst.max(matrix_rel_error(&fa, &a)).max(matrix_rel_error(&fb, &b));
    }
    worst
}

#[test]
fn pendulum_jacobians_match_differences() {
    let model = rk4_discretize(pendulum_field(PendulumParams::default()).unwrap(), 0.025, 1).unwrap();
    let err = check_jacobians(&model, 11);
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn cart_train_jacobians_match_differences() {
    for coupling in [PendulumCoupling::Cosine, PendulumCoupling::Sine] {
        for carts in [1, 3] {
            let params = CartTrainParams {
                coupling,
                ..CartTrainParams::standard(carts)
            };
            let model = rk4_discretize(cart_train_field(params).unwrap(), 0.05, 4).unwrap();
            let err = check_jacobians(&model, 7 + carts as u64);
            assert!(err <= 1e-6, "{coupling:?} N={carts}: {err:e}");
        }
    }
}

#[test]
fn pendulum_reduced_gradient_matches_differences() {
    let steps = 50;
    let params = PendulumParams::default();
    let model = rk4_discretize(pendulum_field(params).unwrap(), 0.025, 1).unwrap();
    let horizon = Horizon::new(steps, 2, 1).unwrap();
    let (x_ref, u_ref) = make_step_reference(
        &horizon,
        &Vector::zeros(2),
        &Vector::zeros(1),
        &Vector::from_row_slice(&[0.5, 0.0]),
        &Vector::from_element(1, params.equilibrium_torque(0.5)),
        steps / 2,
    )
    .unwrap();
    let cost = QuadraticTrackingCost::new(
        Matrix::from_diagonal(&Vector::from_row_slice(&[10.0, 1.0])),
        Matrix::from_element(1, 1, 1e-3),
        Matrix::from_diagonal(&Vector::from_row_slice(&[100.0, 1e4])),
        x_ref,
        u_ref,
    )
    .unwrap();
    let weights = RegulatorWeights {
        q: cost.q().clone(),
        r: cost.r().clone(),
        qf: cost.qf().clone(),
    };
    let (a, b) = curve_jacobians(&Curve::zeros(&horizon), &model);
    let gains = riccati_gains(&a, &b, &weights).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut curve = Curve::zeros(&horizon);
    for i in 0..curve.dim() {
        *curve.coord_mut(i) = rng.random_range(-0.3..0.3);
    }
    let x0 = Vector::zeros(2);
    let traj = project(&curve, &gains, &x0, &model).unwrap();
    let grad = closed_loop_direction(&linearize(&traj, &model, &cost), &gains)
        .to_curve()
        .scale(-1.0);
    let reference = fd_reduced_gradient(&curve, &gains, &x0, &model, &cost, 1e-5).unwrap();
    let err = max_relative_error(&grad, &reference);
    assert!(err <= 1e-6, "{err:e}");
}
