//! Central finite-difference Jacobians, used as a verification oracle.

use super::ContinuousField;
use crate::ocp::{DynamicsModel, Matrix, Vector};

/// Central-difference `(d map/dx, d map/du)` of an arbitrary `(x, u) -> y` map.
pub fn fd_jacobian_of<F>(map: F, x: &Vector, u: &Vector, h: f64) -> (Matrix, Matrix)
where
    F: Fn(&Vector, &Vector) -> Vector,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let out_dim = map(x, u).len();
    let mut a = Matrix::zeros(out_dim, x.len());
    let mut b = Matrix::zeros(out_dim, u.len());
    for j in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        a.set_column(j, &((map(&xp, u) - map(&xm, u)) / (2.0 * h)));
    }
    for j in 0..u.len() {
        let mut up = u.clone();
        let mut um = u.clone();
        up[j] += h;
        um[j] -= h;
        b.set_column(j, &((map(x, &up) - map(x, &um)) / (2.0 * h)));
    }
    (a, b)
}

/// Finite-difference Jacobians of a discrete model's step map.
pub fn fd_jacobian(model: &dyn DynamicsModel, x: &Vector, u: &Vector, h: f64) -> (Matrix, Matrix) {
    fd_jacobian_of(|x, u| model.step(x, u), x, u, h)
}

/// Finite-difference Jacobians of a continuous vector field.
pub fn fd_field_jacobian(
    field: &dyn ContinuousField,
    x: &Vector,
    u: &Vector,
    h: f64,
) -> (Matrix, Matrix) {
    fd_jacobian_of(|x, u| field.eval(x, u), x, u, h)
}

/// Max entrywise error of `approx` relative to `max(|exact|, 1)`.
pub fn max_relative_error(exact: &Matrix, approx: &Matrix) -> f64 {
    exact
        .iter()
        .zip(approx.iter())
        .map(|(e, a)| (e - a).abs() / e.abs().max(1.0))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{pendulum_field, rk4_discretize, LinearModel, PendulumParams};

    #[test]
    fn exact_for_linear_maps() {
        let a = Matrix::from_row_slice(2, 2, &[0.9, 0.2, -0.1, 1.1]);
        let b = Matrix::from_row_slice(2, 1, &[0.0, 0.5]);
        let model = LinearModel::new(a.clone(), b.clone()).unwrap();
        let x = Vector::from_row_slice(&[0.3, -2.0]);
        let u = Vector::from_row_slice(&[1.5]);
        let (fa, fb) = fd_jacobian(&model, &x, &u, 1e-4);
        assert!((fa - a).amax() < 1e-10);
        assert!((fb - b).amax() < 1e-10);
    }

    #[test]
    fn pendulum_origin_matches_analytic() {
        let model = rk4_discretize(pendulum_field(PendulumParams::default()).unwrap(), 0.025, 1)
            .unwrap();
        let x = Vector::zeros(2);
        let u = Vector::zeros(1);
        let (a, b) = model.jacobians(&x, &u);
        let (fa, fb) = fd_jacobian(&model, &x, &u, 1e-6);
        assert!(max_relative_error(&a, &fa) < 1e-5);
        assert!(max_relative_error(&b, &fb) < 1e-5);
    }

    #[test]
    fn second_order_convergence() {
        // Nonlinear field, so the truncation error is O(h^2).
        let field = pendulum_field(PendulumParams::default()).unwrap();
        let x = Vector::from_row_slice(&[0.8, -0.4]);
        let u = Vector::from_row_slice(&[0.3]);
        let (exact, _) = field.jacobians(&x, &u).unwrap();
        let err = |h: f64| (fd_field_jacobian(&field, &x, &u, h).0 - &exact).amax();
        let ratio = err(1e-2) / err(5e-3);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}
