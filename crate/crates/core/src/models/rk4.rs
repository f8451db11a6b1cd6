use super::fd::fd_jacobian_of;
use super::ContinuousField;
use crate::error::{Error, Result};
use crate::ocp::{DynamicsModel, Matrix, Vector};

/// Classical RK4 discretization of a continuous field with a zero-order hold
/// on the input over each sample.
#[derive(Debug, Clone)]
pub struct Rk4Model<F> {
    field: F,
    delta: f64,
    substeps: usize,
}

/// Discretizes `field` with sample time `delta`, taking `substeps` RK4 steps of
/// size `delta / substeps` per sample.
pub fn rk4_discretize<F: ContinuousField>(field: F, delta: f64, substeps: usize) -> Result<Rk4Model<F>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("must be positive, got {delta}"),
        });
    }
    if substeps == 0 {
        return Err(Error::InvalidParameter {
            name: "substeps",
            reason: "must be at least 1".into(),
        });
    }
    Ok(Rk4Model {
        field,
        delta,
        substeps,
    })
}

const FD_STEP: f64 = 1e-6;

struct Rk4Work {
    k1: Vector,
    k2: Vector,
    k3: Vector,
    k4: Vector,
    y: Vector,
}

impl Rk4Work {
    fn new(n: usize) -> Self {
        Self {
            k1: Vector::zeros(n),
            k2: Vector::zeros(n),
            k3: Vector::zeros(n),
            k4: Vector::zeros(n),
            y: Vector::zeros(n),
        }
    }
}

impl<F: ContinuousField> Rk4Model<F> {
    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    fn h(&self) -> f64 {
        self.delta / self.substeps as f64
    }

    /// One RK4 substep in place, using `work` as stage storage.
    fn substep(&self, x: &mut Vector, u: &Vector, h: f64, work: &mut Rk4Work) {
        let f = &self.field;
        let Rk4Work { k1, k2, k3, k4, y } = work;
        f.eval_into(x, u, k1);
        y.copy_from(x);
        y.axpy(0.5 * h, k1, 1.0);
        f.eval_into(y, u, k2);
        y.copy_from(x);
        y.axpy(0.5 * h, k2, 1.0);
        f.eval_into(y, u, k3);
        y.copy_from(x);
        y.axpy(h, k3, 1.0);
        f.eval_into(y, u, k4);
        // Same association as (k1 + 2 k2 + 2 k3 + k4) * (h / 6).
        for i in 0..x.len() {
            x[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }

    /// One substep together with its exact sensitivities, chaining the field
    /// Jacobians through the four stages.
    fn substep_with_jacobians(
        &self,
        x: &Vector,
        u: &Vector,
        h: f64,
    ) -> Option<(Vector, Matrix, Matrix)> {
        let f = &self.field;
        let n = x.len();
        let eye = Matrix::identity(n, n);

        let k1 = f.eval(x, u);
        let (fx1, fu1) = f.jacobians(x, u)?;
        let sx1 = fx1;
        let su1 = fu1;

        let y2 = x + &k1 * (0.5 * h);
        let k2 = f.eval(&y2, u);
        let (fx2, fu2) = f.jacobians(&y2, u)?;
        let sx2 = &fx2 * (&eye + &sx1 * (0.5 * h));
        let su2 = &fx2 * (&su1 * (0.5 * h)) + fu2;

        let y3 = x + &k2 * (0.5 * h);
        let k3 = f.eval(&y3, u);
        let (fx3, fu3) = f.jacobians(&y3, u)?;
        let sx3 = &fx3 * (&eye + &sx2 * (0.5 * h));
        let su3 = &fx3 * (&su2 * (0.5 * h)) + fu3;

        let y4 = x + &k3 * h;
        let k4 = f.eval(&y4, u);
        let (fx4, fu4) = f.jacobians(&y4, u)?;
        let sx4 = &fx4 * (&eye + &sx3 * h);
        let su4 = &fx4 * (&su3 * h) + fu4;

        let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let a = eye + (sx1 + sx2 * 2.0 + sx3 * 2.0 + sx4) * (h / 6.0);
        let b = (su1 + su2 * 2.0 + su3 * 2.0 + su4) * (h / 6.0);
        Some((next, a, b))
    }

    fn analytic_jacobians(&self, x: &Vector, u: &Vector) -> Option<(Matrix, Matrix)> {
        let h = self.h();
        let (mut state, mut a, mut b) = self.substep_with_jacobians(x, u, h)?;
        for _ in 1..self.substeps {
            let (next, sa, sb) = self.substep_with_jacobians(&state, u, h)?;
            a = &sa * a;
            b = &sa * b + sb;
            state = next;
        }
        Some((a, b))
    }
}

impl<F: ContinuousField> DynamicsModel for Rk4Model<F> {
    fn state_dim(&self) -> usize {
        self.field.state_dim()
    }

    fn input_dim(&self) -> usize {
        self.field.input_dim()
    }

    fn step(&self, x: &Vector, u: &Vector) -> Vector {
        let h = self.h();
        let mut work = Rk4Work::new(x.len());
        let mut state = x.clone();
        for _ in 0..self.substeps {
            self.substep(&mut state, u, h, &mut work);
        }
        state
    }

    fn jacobians(&self, x: &Vector, u: &Vector) -> (Matrix, Matrix) {
        self.analytic_jacobians(x, u)
            .unwrap_or_else(|| fd_jacobian_of(|x, u| self.step(x, u), x, u, FD_STEP))
    }
}
