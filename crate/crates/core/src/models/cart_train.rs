use serde::{Deserialize, Serialize};

use super::ContinuousField;
use crate::error::{Error, Result};
use crate::ocp::{Matrix, Vector};

/// Trigonometric factor multiplying the cart acceleration in the pendulum equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PendulumCoupling {
    /// `-Mp l cos(theta) w''`: the cart drives the pendulum to first order.
    #[default]
    Cosine,
    /// `-Mp l sin(theta) w''`: the pendulum is uncontrollable at the upright
    /// equilibrium, so no stabilizing Riccati solution exists there.
    Sine,
}

impl PendulumCoupling {
    /// Returns `(g(theta), g'(theta))`.
    fn eval(self, s: f64, c: f64) -> (f64, f64) {
        match self {
            PendulumCoupling::Cosine => (c, -s),
            PendulumCoupling::Sine => (s, c),
        }
    }
}

/// Parameters shared by every pendulum-on-cart unit in the train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartTrainParams {
    pub carts: usize,
    /// Pendulum length [m].
    pub length: f64,
    /// Pendulum mass [kg].
    pub pendulum_mass: f64,
    /// Cart mass [kg].
    pub cart_mass: f64,
    /// Pendulum damping [N m s / rad].
    pub pendulum_damping: f64,
    /// Cart damping [N s / m].
    pub cart_damping: f64,
    /// Coupling spring constant [N / m].
    pub spring: f64,
    /// Gravitational acceleration [m / s^2].
    pub gravity: f64,
    #[serde(default)]
    pub coupling: PendulumCoupling,
}

impl CartTrainParams {
    /// Reference parameter set with `carts` units.
    pub fn standard(carts: usize) -> Self {
        Self {
            carts,
            length: 1.0,
            pendulum_mass: 0.2,
            cart_mass: 6.0,
            pendulum_damping: 0.01,
            cart_damping: 10.0,
            spring: 0.5,
            gravity: 9.81,
            coupling: PendulumCoupling::Cosine,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.carts == 0 {
            return Err(Error::InvalidParameter {
                name: "carts",
                reason: "need at least one cart".into(),
            });
        }
        for (name, v) in [
            ("length", self.length),
            ("pendulum_mass", self.pendulum_mass),
            ("cart_mass", self.cart_mass),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        for (name, v) in [
            ("pendulum_damping", self.pendulum_damping),
            ("cart_damping", self.cart_damping),
            ("spring", self.spring),
            ("gravity", self.gravity),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Train of pendulum-on-cart units coupled by springs between neighbouring carts.
///
/// Unit `i` has state `(theta_i, theta_i', w_i, w_i')` and input force `u_i`:
///
/// ```text
/// Mp l^2 theta'' + fp theta' - Mp l g(theta) w'' - Mp l g sin(theta) = 0
/// (Mc + Mp) w'' + fc w' - 1/2 Mp l cos(theta) theta''
///     + 1/2 Mp l sin(theta) theta'^2 - ks w_{i+1} + ks w_{i-1} = u_i
/// ```
///
/// where `g` is `cos` or `sin` per [`PendulumCoupling`]. The spring terms keep
/// the signs exactly as written above; the first and last
/// carts drop the term of their missing neighbour. Both equations are solved
/// jointly for `(theta'', w'')` through the 2x2 per-unit mass matrix.
#[derive(Debug, Clone)]
pub struct CartTrain {
    params: CartTrainParams,
}

pub fn cart_train_field(params: CartTrainParams) -> Result<CartTrain> {
    params.validate()?;
    let p = &params;
    // |g(theta) cos(theta)| <= bound gives a lower bound on the mass-matrix determinant.
    let bound = match p.coupling {
        PendulumCoupling::Cosine => 0.5,
        PendulumCoupling::Sine => 0.25,
    };
    let det_lower = p.pendulum_mass * p.length * p.length * (p.cart_mass + p.pendulum_mass)
        - bound * p.pendulum_mass * p.pendulum_mass * p.length * p.length;
    if det_lower <= 0.0 {
        return Err(Error::Singular {
            what: "cart mass matrix",
            timestep: 0,
        });
    }
    Ok(CartTrain { params })
}

/// Per-unit mass matrix entries, right-hand sides and their solution.
struct UnitSolve {
    m12: f64,
    m21: f64,
    r1: f64,
    r2: f64,
    det: f64,
    theta_acc: f64,
    w_acc: f64,
}

impl CartTrain {
    pub fn params(&self) -> &CartTrainParams {
        &self.params
    }

    fn m11(&self) -> f64 {
        self.params.pendulum_mass * self.params.length * self.params.length
    }

    fn m22(&self) -> f64 {
        self.params.cart_mass + self.params.pendulum_mass
    }

    fn spring_force(&self, x: &Vector, i: usize) -> f64 {
        let ks = self.params.spring;
        let mut force = 0.0;
        if i + 1 < self.params.carts {
            force += ks * x[4 * (i + 1) + 2];
        }
        if i > 0 {
            force -= ks * x[4 * (i - 1) + 2];
        }
        force
    }

    fn solve_unit(&self, x: &Vector, u: &Vector, i: usize) -> UnitSolve {
        let p = &self.params;
        let (theta, theta_dot, w_dot) = (x[4 * i], x[4 * i + 1], x[4 * i + 3]);
        let (s, c) = theta.sin_cos();
        let mpl = p.pendulum_mass * p.length;
        let m11 = self.m11();
        let m22 = self.m22();
        let m12 = -mpl * p.coupling.eval(s, c).0;
        let m21 = -0.5 * mpl * c;
        let r1 = -p.pendulum_damping * theta_dot + mpl * p.gravity * s;
        let r2 = u[i] - p.cart_damping * w_dot - 0.5 * mpl * s * theta_dot * theta_dot
            + self.spring_force(x, i);
        let det = m11 * m22 - m12 * m21;
        UnitSolve {
            m12,
            m21,
            r1,
            r2,
            det,
            theta_acc: (m22 * r1 - m12 * r2) / det,
            w_acc: (m11 * r2 - m21 * r1) / det,
        }
    }
}

impl ContinuousField for CartTrain {
    fn state_dim(&self) -> usize {
        4 * self.params.carts
    }

    fn input_dim(&self) -> usize {
        self.params.carts
    }

    fn eval(&self, x: &Vector, u: &Vector) -> Vector {
        let mut xdot = Vector::zeros(self.state_dim());
        self.eval_into(x, u, &mut xdot);
        xdot
    }

    fn eval_into(&self, x: &Vector, u: &Vector, xdot: &mut Vector) {
        for i in 0..self.params.carts {
            let sol = self.solve_unit(x, u, i);
            xdot[4 * i] = x[4 * i + 1];
            xdot[4 * i + 1] = sol.theta_acc;
            xdot[4 * i + 2] = x[4 * i + 3];
            xdot[4 * i + 3] = sol.w_acc;
        }
    }

    fn jacobians(&self, x: &Vector, u: &Vector) -> Option<(Matrix, Matrix)> {
        let p = &self.params;
        let n = self.state_dim();
        let mut a = Matrix::zeros(n, n);
        let mut b = Matrix::zeros(n, p.carts);
        let m11 = self.m11();
        let m22 = self.m22();
        let mpl = p.pendulum_mass * p.length;
        for i in 0..p.carts {
            let sol = self.solve_unit(x, u, i);
            let (theta, theta_dot) = (x[4 * i], x[4 * i + 1]);
            let (s, c) = theta.sin_cos();
            let ti = 4 * i + 1;
            let wi = 4 * i + 3;
            a[(4 * i, ti)] = 1.0;
            a[(4 * i + 2, wi)] = 1.0;

            // Sensitivities of (theta'', w'') to a variable that perturbs
            // m12, m21, r1 and r2 by the given amounts.
            let accel_diff = |dm12: f64, dm21: f64, dr1: f64, dr2: f64| {
                let ddet = -(dm12 * sol.m21 + sol.m12 * dm21);
                let dtheta = (m22 * dr1 - dm12 * sol.r2 - sol.m12 * dr2 - sol.theta_acc * ddet)
                    / sol.det;
                let dw = (m11 * dr2 - dm21 * sol.r1 - sol.m21 * dr1 - sol.w_acc * ddet) / sol.det;
                (dtheta, dw)
            };

            let (dt, dw) = accel_diff(
                -mpl * p.coupling.eval(s, c).1,
                0.5 * mpl * s,
                mpl * p.gravity * c,
                -0.5 * mpl * c * theta_dot * theta_dot,
            );
            a[(ti, 4 * i)] = dt;
            a[(wi, 4 * i)] = dw;

            let (dt, dw) = accel_diff(0.0, 0.0, -p.pendulum_damping, -mpl * s * theta_dot);
            a[(ti, 4 * i + 1)] = dt;
            a[(wi, 4 * i + 1)] = dw;

            let (dt, dw) = accel_diff(0.0, 0.0, 0.0, -p.cart_damping);
            a[(ti, 4 * i + 3)] = dt;
            a[(wi, 4 * i + 3)] = dw;

            let (dt, dw) = accel_diff(0.0, 0.0, 0.0, p.spring);
            if i + 1 < p.carts {
                a[(ti, 4 * (i + 1) + 2)] = dt;
                a[(wi, 4 * (i + 1) + 2)] = dw;
            }
            if i > 0 {
                a[(ti, 4 * (i - 1) + 2)] = -dt;
                a[(wi, 4 * (i - 1) + 2)] = -dw;
            }

            let (dt, dw) = accel_diff(0.0, 0.0, 0.0, 1.0);
            b[(ti, i)] = dt;
            b[(wi, i)] = dw;
        }
        Some((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upright_rest_is_equilibrium() {
        let f = cart_train_field(CartTrainParams::standard(3)).unwrap();
        let xdot = f.eval(&Vector::zeros(12), &Vector::zeros(3));
        assert_eq!(xdot, Vector::zeros(12));
    }

    #[test]
    fn single_cart_has_no_spring() {
        let f = cart_train_field(CartTrainParams::standard(1)).unwrap();
        let mut x = Vector::zeros(4);
        x[2] = 3.0;
        assert_eq!(f.eval(&x, &Vector::zeros(1)), Vector::zeros(4));
    }

    #[test]
    fn two_cart_coupling_sign() {
        // w_2 = 1 puts +ks on the first cart's force balance. At theta = 0 the
        // mass matrix is [[Mp l^2, -Mp l], [-Mp l / 2, Mc + Mp]].
        let p = CartTrainParams::standard(2);
        let f = cart_train_field(p).unwrap();
        let mut x = Vector::zeros(8);
        x[6] = 1.0;
        let xdot = f.eval(&x, &Vector::zeros(2));
        let mpl = p.pendulum_mass * p.length;
        let det = mpl * p.length * (p.cart_mass + p.pendulum_mass) - 0.5 * mpl * mpl;
        assert!((xdot[1] - mpl * p.spring / det).abs() < 1e-15);
        assert!((xdot[3] - mpl * p.length * p.spring / det).abs() < 1e-15);
        assert!(xdot[3] > 0.0);
        assert_eq!(xdot[7], 0.0);
    }

    #[test]
    fn sine_coupling_decouples_upright_pendulum() {
        // With the sine factor the mass matrix at theta = 0 is
        // [[Mp l^2, 0], [-Mp l / 2, Mc + Mp]]: theta'' = 0, w_1'' = ks / (Mc + Mp).
        let p = CartTrainParams {
            coupling: PendulumCoupling::Sine,
            ..CartTrainParams::standard(2)
        };
        let f = cart_train_field(p).unwrap();
        let mut x = Vector::zeros(8);
        x[6] = 1.0;
        let xdot = f.eval(&x, &Vector::zeros(2));
        let expected = p.spring / (p.cart_mass + p.pendulum_mass);
        assert_eq!(xdot[1], 0.0);
        assert!((xdot[3] - expected).abs() < 1e-15);
        assert!(xdot[3] > 0.0);
        // The second cart sees -ks * w_1 = 0 and no own-position term.
        assert_eq!(xdot[7], 0.0);
    }

    #[test]
    fn jacobians_match_fd_for_both_couplings() {
        use crate::models::fd::{fd_field_jacobian, max_relative_error};
        for coupling in [PendulumCoupling::Cosine, PendulumCoupling::Sine] {
            let f = cart_train_field(CartTrainParams {
                coupling,
                ..CartTrainParams::standard(3)
            })
            .unwrap();
            let x = Vector::from_fn(12, |i, _| ((i as f64) * 0.91).cos() * 0.7);
            let u = Vector::from_row_slice(&[0.3, -1.2, 2.0]);
            let (a, b) = f.jacobians(&x, &u).unwrap();
            let (fa, fb) = fd_field_jacobian(&f, &x, &u, 1e-6);
            assert!(max_relative_error(&a, &fa) < 1e-6, "{coupling:?}");
            assert!(max_relative_error(&b, &fb) < 1e-6, "{coupling:?}");
        }
    }
}
