//! Benchmark dynamics, RK4 discretization and finite-difference Jacobians.

mod cart_train;
pub mod fd;
mod linear;
mod pendulum;
mod rk4;

pub use cart_train::{cart_train_field, CartTrain, CartTrainParams, PendulumCoupling};
pub use fd::fd_jacobian;
pub use linear::LinearModel;
pub use pendulum::{pendulum_field, Pendulum, PendulumParams};
pub use rk4::{rk4_discretize, Rk4Model};

use crate::ocp::{Matrix, Vector};

/// Continuous-time vector field `xdot = f_c(x, u)`.
pub trait ContinuousField: Send + Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn eval(&self, x: &Vector, u: &Vector) -> Vector;

    /// Writes `f_c(x, u)` into `out` (length `state_dim`).
    fn eval_into(&self, x: &Vector, u: &Vector, out: &mut Vector) {
        out.copy_from(&self.eval(x, u));
    }

    /// Analytic `(df/dx, df/du)`, if the field provides them.
    fn jacobians(&self, _x: &Vector, _u: &Vector) -> Option<(Matrix, Matrix)> {
        None
    }
}
