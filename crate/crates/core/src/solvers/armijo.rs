use thiserror::Error;

use crate::ocp::Curve;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoParams {
    pub gamma0: f64,
    pub beta: f64,
    pub slope: f64,
    pub max_backtracks: usize,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self {
            gamma0: 1.0,
            beta: 0.5,
            slope: 1e-4,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoStep {
    pub gamma: f64,
    pub cost: f64,
    pub backtracks: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineSearchError {
    #[error("line search needs a descent direction (grad'd = {grad_dot_dir})")]
    NotDescent { grad_dot_dir: f64 },
    /// `last_cost` is `None` when the last trial rollout diverged.
    #[error("line search rejected all {trials} trials (last gamma {last_gamma:e}, last cost {last_cost:?})")]
    Exhausted {
        trials: usize,
        last_gamma: f64,
        last_cost: Option<f64>,
    },
}

/// Backtracking line search along `direction` from `base`.
///
/// `eval` maps a trial curve to its reduced cost, or `None` if the rollout
/// failed; failed trials count as rejections. The accepted trial is always
/// the last one passed to `eval`.
pub fn armijo_search(
    mut eval: impl FnMut(&Curve) -> Option<f64>,
    base: &Curve,
    base_cost: f64,
    direction: &Curve,
    grad_dot_dir: f64,
    params: &ArmijoParams,
) -> Result<ArmijoStep, LineSearchError> {
    if !(grad_dot_dir < 0.0) {
        return Err(LineSearchError::NotDescent { grad_dot_dir });
    }
    let mut gamma = params.gamma0;
    let mut last_cost = None;
    for j in 0..=params.max_backtracks {
        if j > 0 {
            gamma *= params.beta;
        }
        let trial = base.add_scaled(direction, gamma);
        last_cost = eval(&trial);
        if let Some(cost) = last_cost {
            if cost <= base_cost + params.slope * gamma * grad_dot_dir {
                return Ok(ArmijoStep {
                    gamma,
                    cost,
                    backtracks: j,
                });
            }
        }
    }
    Err(LineSearchError::Exhausted {
        trials: params.max_backtracks + 1,
        last_gamma: gamma,
        last_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocp::Vector;

    fn point(z: f64) -> Curve {
        Curve::new(vec![Vector::zeros(1)], vec![Vector::from_element(1, z)]).unwrap()
    }

    fn square(c: &Curve) -> Option<f64> {
        Some(c.mu()[0][0].powi(2))
    }

    #[test]
    fn quadratic_hand_example() {
        let step = armijo_search(square, &point(1.0), 1.0, &point(-2.0), -4.0, &ArmijoParams::default())
            .unwrap();
        assert_eq!(step.gamma, 0.5);
        assert_eq!(step.cost, 0.0);
        assert_eq!(step.backtracks, 1);
    }

    #[test]
    fn zero_direction_is_rejected() {
        let err = armijo_search(square, &point(1.0), 1.0, &point(0.0), 0.0, &ArmijoParams::default())
            .unwrap_err();
        assert!(matches!(err, LineSearchError::NotDescent { .. }));
    }

    #[test]
    fn small_initial_step_accepted_immediately() {
        let params = ArmijoParams {
            gamma0: 0.1,
            ..ArmijoParams::default()
        };
        let step = armijo_search(square, &point(1.0), 1.0, &point(-2.0), -4.0, &params).unwrap();
        assert_eq!(step.backtracks, 0);
        assert_eq!(step.gamma, 0.1);
    }

    #[test]
    fn failed_rollouts_are_rejections() {
        let mut calls = 0;
        let eval = |c: &Curve| {
            calls += 1;
            let z = c.mu()[0][0];
            (z.abs() < 0.5).then(|| z * z)
        };
        let step = armijo_search(eval, &point(1.0), 1.0, &point(-3.0), -6.0, &ArmijoParams::default())
            .unwrap();
        assert_eq!(step.gamma, 0.25);
        assert_eq!(calls, 3);

        let err = armijo_search(|_| None, &point(1.0), 1.0, &point(-1.0), -1.0, &ArmijoParams {
            max_backtracks: 3,
            ..ArmijoParams::default()
        })
        .unwrap_err();
        assert_eq!(
            err,
            LineSearchError::Exhausted {
                trials: 4,
                last_gamma: 0.125,
                last_cost: None
            }
        );
    }
}
