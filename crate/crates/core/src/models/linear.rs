use crate::error::{Error, Result};
use crate::ocp::{DynamicsModel, Matrix, Vector};

/// Discrete linear dynamics `x_{t+1} = A x_t + B u_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    a: Matrix,
    b: Matrix,
}

impl LinearModel {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::InvalidParameter {
                name: "A",
                reason: format!("must be square and non-empty, got {}x{}", a.nrows(), a.ncols()),
            });
        }
        if b.nrows() != a.nrows() || b.ncols() == 0 {
            return Err(Error::InvalidParameter {
                name: "B",
                reason: format!(
                    "expected {} rows and at least one column, got {}x{}",
                    a.nrows(),
                    b.nrows(),
                    b.ncols()
                ),
            });
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }
}

impl DynamicsModel for LinearModel {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn step(&self, x: &Vector, u: &Vector) -> Vector {
        &self.a * x + &self.b * u
    }

    fn jacobians(&self, _x: &Vector, _u: &Vector) -> (Matrix, Matrix) {
        (self.a.clone(), self.b.clone())
    }
}
