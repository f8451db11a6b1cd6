use serde::{Deserialize, Serialize};

use super::ContinuousField;
use crate::error::{Error, Result};
use crate::ocp::{Matrix, Vector};

/// Physical parameters of the torque-actuated inverted pendulum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    /// Length [m].
    pub length: f64,
    /// Mass [kg].
    pub mass: f64,
    /// Viscous damping [N m s / rad].
    pub friction: f64,
    /// Gravitational acceleration [m / s^2].
    pub gravity: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            length: 1.0,
            mass: 1.0,
            friction: 0.5,
            gravity: 9.81,
        }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                })
            }
        };
        let nonneg = |name, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be non-negative, got {v}"),
                })
            }
        };
        positive("length", self.length)?;
        positive("mass", self.mass)?;
        nonneg("friction", self.friction)?;
        nonneg("gravity", self.gravity)
    }

    /// Torque holding the pendulum at rest at angle `theta` (measured from upright).
    pub fn equilibrium_torque(&self, theta: f64) -> f64 {
        -self.mass * self.gravity * self.length * theta.sin()
    }
}

/// `M l^2 theta'' + f theta' - M l g sin(theta) = tau`, state `(theta, theta')`,
/// input `tau`, with `theta` measured from the upward equilibrium.
#[derive(Debug, Clone)]
pub struct Pendulum {
    params: PendulumParams,
}

pub fn pendulum_field(params: PendulumParams) -> Result<Pendulum> {
    params.validate()?;
    Ok(Pendulum { params })
}

impl Pendulum {
    pub fn params(&self) -> &PendulumParams {
        &self.params
    }

    /// Kinetic plus potential energy (zero potential at the horizontal).
    pub fn energy(&self, x: &Vector) -> f64 {
        let p = &self.params;
        0.5 * p.mass * p.length * p.length * x[1] * x[1] + p.mass * p.gravity * p.length * x[0].cos()
    }
}

impl ContinuousField for Pendulum {
    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &Vector, u: &Vector) -> Vector {
        let mut out = Vector::zeros(2);
        self.eval_into(x, u, &mut out);
        out
    }

    fn eval_into(&self, x: &Vector, u: &Vector, out: &mut Vector) {
        let p = &self.params;
        let inertia = p.mass * p.length * p.length;
        out[0] = x[1];
        out[1] = (u[0] + p.mass * p.length * p.gravity * x[0].sin() - p.friction * x[1]) / inertia;
    }

    fn jacobians(&self, x: &Vector, _u: &Vector) -> Option<(Matrix, Matrix)> {
        let p = &self.params;
        let inertia = p.mass * p.length * p.length;
        let a = Matrix::from_row_slice(
            2,
            2,
            &[
                0.0,
                1.0,
                p.mass * p.length * p.gravity * x[0].cos() / inertia,
                -p.friction / inertia,
            ],
        );
        let b = Matrix::from_row_slice(2, 1, &[0.0, 1.0 / inertia]);
        Some((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn upright_is_equilibrium() {
        let f = pendulum_field(PendulumParams::default()).unwrap();
        assert_eq!(f.eval(&v(&[0.0, 0.0]), &v(&[0.0])), v(&[0.0, 0.0]));
    }

    #[test]
    fn tilted_equilibrium_under_holding_torque() {
        let p = PendulumParams::default();
        let f = pendulum_field(p).unwrap();
        let xdot = f.eval(&v(&[0.5, 0.0]), &v(&[p.equilibrium_torque(0.5)]));
        assert_eq!(xdot[0], 0.0);
        assert!(xdot[1].abs() < 1e-15);
    }

    #[test]
    fn damping_hand_value() {
        let f = pendulum_field(PendulumParams::default()).unwrap();
        assert_eq!(f.eval(&v(&[0.0, 1.0]), &v(&[0.0])), v(&[1.0, -0.5]));
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = PendulumParams::default();
        p.mass = 0.0;
        assert!(pendulum_field(p).is_err());
        let mut p = PendulumParams::default();
        p.friction = -1.0;
        assert!(pendulum_field(p).is_err());
    }
}
