//! Turns an [`ExperimentConfig`] into a solvable problem.

use trajopt_core::lqr::{dare_terminal_weight, RegulatorWeights};
use trajopt_core::models::{
    cart_train_field, pendulum_field, rk4_discretize, CartTrain, LinearModel, Pendulum, PendulumParams, Rk4Model,
};
use trajopt_core::ocp::{make_step_reference, Curve, DynamicsModel, Horizon, Matrix, QuadraticTrackingCost, Vector};
use trajopt_core::solvers::Problem;

use crate::config::{
    rows_to_matrix, ExperimentConfig, InitialCurveKind, MatrixSpec, ModelSpec, ReferenceSpec, TerminalKeyword,
    TerminalSpec,
};
use crate::error::CliError;
use crate::io::read_trajectory_file;
use crate::reference::make_swing_reference;

pub enum Plant {
    Pendulum(Rk4Model<Pendulum>, PendulumParams),
    CartTrain(Rk4Model<CartTrain>),
    Linear(LinearModel),
}

impl Plant {
    pub fn build(config: &ExperimentConfig) -> Result<Self, CliError> {
        let h = &config.horizon;
        Ok(match &config.model {
            ModelSpec::Linear { a, b } => {
                let a = rows_to_matrix(a, "model.a", None)?;
                let b = rows_to_matrix(b, "model.b", None)?;
                Plant::Linear(LinearModel::new(a, b)?)
            }
            spec => {
                if let Some(params) = spec.pendulum_params() {
                    let field = pendulum_field(params)?;
                    Plant::Pendulum(rk4_discretize(field, h.delta, h.substeps)?, params)
                } else {
                    let params = spec.cart_train_params().expect("remaining model kind");
                    Plant::CartTrain(rk4_discretize(cart_train_field(params)?, h.delta, h.substeps)?)
                }
            }
        })
    }

    pub fn dynamics(&self) -> &dyn DynamicsModel {
        match self {
            Plant::Pendulum(m, _) => m,
            Plant::CartTrain(m) => m,
            Plant::Linear(m) => m,
        }
    }

    /// Input holding `x` at rest: the gravity torque for the pendulum, zero
    /// otherwise.
    pub fn equilibrium_input(&self, x: &Vector) -> Vector {
        match self {
            Plant::Pendulum(_, p) => Vector::from_element(1, p.equilibrium_torque(x[0])),
            other => Vector::zeros(other.dynamics().input_dim()),
        }
    }

    /// `(angle, angular rate)` state indices of every pendulum.
    pub fn angle_pairs(&self) -> Option<Vec<(usize, usize)>> {
        match self {
            Plant::Pendulum(..) => Some(vec![(0, 1)]),
            Plant::CartTrain(m) => Some((0..m.field().params().carts).map(|i| (4 * i, 4 * i + 1)).collect()),
            Plant::Linear(_) => None,
        }
    }
}

/// Everything needed to call a solver, owned.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub plant: Plant,
    pub steps: usize,
    pub cost: QuadraticTrackingCost,
    pub regulator: RegulatorWeights,
    pub x_init: Vector,
    pub initial_curve: Curve,
}

impl Experiment {
    pub fn resolve(config: ExperimentConfig) -> Result<Self, CliError> {
        let steps = config.horizon.steps()?;
        Self::resolve_with_steps(config, steps)
    }

    /// Like [`Experiment::resolve`] with the horizon shortened or extended to
    /// `steps` samples (the reference is regenerated for that length).
    pub fn resolve_with_steps(mut config: ExperimentConfig, steps: usize) -> Result<Self, CliError> {
        config.horizon.steps()?;
        config.horizon.duration = steps as f64 * config.horizon.delta;
        config
            .solver
            .validate()
            .map_err(|reason| CliError::config("solver", reason))?;
        let plant = Plant::build(&config)?;
        let model = plant.dynamics();
        let (n, m) = (model.state_dim(), model.input_dim());
        let horizon = Horizon::new(steps, n, m)?;

        let at_rest = |x: &Vector| plant.equilibrium_input(x);
        let (x_ref, u_ref) = build_reference(&config, &plant, &horizon, &at_rest)?;

        let q = config.cost.q.build(n, "cost.q")?;
        let r = config.cost.r.build(m, "cost.r")?;
        let qf = terminal(&config.cost.qf, &plant, &q, &r, "cost.qf")?;
        let cost = QuadraticTrackingCost::new(q.clone(), r.clone(), qf.clone(), x_ref, u_ref)?;

        let reg = &config.regulator;
        let build_or = |spec: &Option<MatrixSpec>, dim, field, fallback: &Matrix| match spec {
            Some(s) => s.build(dim, field),
            None => Ok(fallback.clone()),
        };
        let q_reg = build_or(&reg.q, n, "regulator.q", &q)?;
        let r_reg = build_or(&reg.r, m, "regulator.r", &r)?;
        let qf_reg = match &reg.qf {
            Some(spec) => terminal(spec, &plant, &q_reg, &r_reg, "regulator.qf")?,
            None => qf,
        };
        let regulator = RegulatorWeights {
            q: q_reg,
            r: r_reg,
            qf: qf_reg,
        };

        let init = &config.initial;
        let x_init = vector_of(init.x_init.as_deref(), n, "initial.x_init")?.unwrap_or_else(|| Vector::zeros(n));
        let initial_curve = match init.curve {
            InitialCurveKind::Constant => {
                let u = vector_of(init.u_init.as_deref(), m, "initial.u_init")?.unwrap_or_else(|| at_rest(&x_init));
                Curve::constant(&x_init, &u, steps)
            }
            InitialCurveKind::Reference => Curve::new(cost.x_ref()[..steps].to_vec(), cost.u_ref().to_vec())?,
        };
        Ok(Experiment {
            config,
            plant,
            steps,
            cost,
            regulator,
            x_init,
            initial_curve,
        })
    }

    pub fn problem(&self) -> Problem<'_> {
        Problem {
            model: self.plant.dynamics(),
            cost: &self.cost,
            x_init: self.x_init.clone(),
            initial_curve: self.initial_curve.clone(),
            regulator: self.regulator.clone(),
        }
    }

    pub fn delta(&self) -> f64 {
        self.config.horizon.delta
    }
}

fn vector_of(values: Option<&[f64]>, dim: usize, field: &str) -> Result<Option<Vector>, CliError> {
    match values {
        None => Ok(None),
        Some(v) if v.len() == dim => Ok(Some(Vector::from_column_slice(v))),
        Some(v) => Err(CliError::config(field, format!("expected {dim} entries, got {}", v.len()))),
    }
}

fn terminal(spec: &TerminalSpec, plant: &Plant, q: &Matrix, r: &Matrix, field: &str) -> Result<Matrix, CliError> {
    match spec {
        TerminalSpec::Matrix(m) => m.build(q.nrows(), field),
        TerminalSpec::Keyword(TerminalKeyword::Dare) => {
            let model = plant.dynamics();
            let x0 = Vector::zeros(model.state_dim());
            let (a, b) = model.jacobians(&x0, &plant.equilibrium_input(&x0));
            Ok(dare_terminal_weight(&a, &b, q, r)?)
        }
    }
}

fn build_reference(
    config: &ExperimentConfig,
    plant: &Plant,
    horizon: &Horizon,
    at_rest: &dyn Fn(&Vector) -> Vector,
) -> Result<(Vec<Vector>, Vec<Vector>), CliError> {
    let (steps, n, m) = (horizon.steps(), horizon.state_dim(), horizon.input_dim());
    let delta = config.horizon.delta;
    match &config.cost.reference {
        ReferenceSpec::Step {
            x_initial,
            u_initial,
            x_final,
            u_final,
            switch_time,
        } => {
            let field = "cost.reference";
            let x0 = vector_of(Some(x_initial), n, field)?.expect("given");
            let x1 = vector_of(Some(x_final), n, field)?.expect("given");
            let u0 = vector_of(u_initial.as_deref(), m, field)?.unwrap_or_else(|| at_rest(&x0));
            let u1 = vector_of(u_final.as_deref(), m, field)?.unwrap_or_else(|| at_rest(&x1));
            let switch = match switch_time {
                Some(t) if *t >= 0.0 => (t / delta).round() as usize,
                Some(t) => return Err(CliError::config("cost.reference.switch_time", format!("negative: {t}"))),
                None => steps / 2,
            };
            Ok(make_step_reference(horizon, &x0, &u0, &x1, &u1, switch)?)
        }
        ReferenceSpec::Swing { amplitude_deg, profile } => {
            if profile != "cubic_smoothstep" {
                return Err(CliError::config(
                    "cost.reference.profile",
                    format!("unknown profile `{profile}` (available: cubic_smoothstep)"),
                ));
            }
            if !(*amplitude_deg > 0.0) {
                return Err(CliError::config("cost.reference.amplitude_deg", "must be positive"));
            }
            let pairs = plant
                .angle_pairs()
                .ok_or_else(|| CliError::config("cost.reference", "swing reference needs a pendulum model"))?;
            Ok(make_swing_reference(steps, delta, n, m, &pairs, *amplitude_deg))
        }
        ReferenceSpec::File { path } => {
            let (xs, us) = read_trajectory_file(path)?;
            let field = "cost.reference.path";
            if xs.len() < steps + 1 || us.len() < steps {
                return Err(CliError::config(field, format!("{} rows, need {}", xs.len(), steps + 1)));
            }
            if xs[0].len() != n || us[0].len() != m {
                return Err(CliError::config(
                    field,
                    format!("columns give n={}, m={}; model has n={n}, m={m}", xs[0].len(), us[0].len()),
                ));
            }
            Ok((xs[..=steps].to_vec(), us[..steps].to_vec()))
        }
    }
}
