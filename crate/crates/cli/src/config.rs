//! Experiment configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trajopt_core::models::{CartTrainParams, PendulumCoupling, PendulumParams};
use trajopt_core::ocp::{Matrix, Vector};
use trajopt_core::solvers::SolverConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub horizon: HorizonSpec,
    pub cost: CostSpec,
    /// Weights of the gain-synthesis regulator; each missing entry copies the cost's.
    #[serde(default)]
    pub regulator: RegulatorSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    pub solver: SolverConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Pendulum {
        #[serde(default = "defaults::pendulum_length")]
        length: f64,
        #[serde(default = "defaults::pendulum_mass")]
        mass: f64,
        #[serde(default = "defaults::pendulum_friction")]
        friction: f64,
        #[serde(default = "defaults::gravity")]
        gravity: f64,
    },
    CartTrain {
        carts: usize,
        #[serde(default = "defaults::train_length")]
        length: f64,
        #[serde(default = "defaults::train_pendulum_mass")]
        pendulum_mass: f64,
        #[serde(default = "defaults::train_cart_mass")]
        cart_mass: f64,
        #[serde(default = "defaults::train_pendulum_damping")]
        pendulum_damping: f64,
        #[serde(default = "defaults::train_cart_damping")]
        cart_damping: f64,
        #[serde(default = "defaults::train_spring")]
        spring: f64,
        #[serde(default = "defaults::gravity")]
        gravity: f64,
        #[serde(default)]
        coupling: PendulumCoupling,
    },
    /// `x+ = A x + B u`; matrices as row lists.
    Linear { a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
}

mod defaults {
    use trajopt_core::models::{CartTrainParams, PendulumParams};

    fn pend() -> PendulumParams {
        PendulumParams::default()
    }
    fn train() -> CartTrainParams {
        CartTrainParams::standard(1)
    }
    pub fn pendulum_length() -> f64 {
        pend().length
    }
    pub fn pendulum_mass() -> f64 {
        pend().mass
    }
    pub fn pendulum_friction() -> f64 {
        pend().friction
    }
    pub fn gravity() -> f64 {
        pend().gravity
    }
    pub fn train_length() -> f64 {
        train().length
    }
    pub fn train_pendulum_mass() -> f64 {
        train().pendulum_mass
    }
    pub fn train_cart_mass() -> f64 {
        train().cart_mass
    }
    pub fn train_pendulum_damping() -> f64 {
        train().pendulum_damping
    }
    pub fn train_cart_damping() -> f64 {
        train().cart_damping
    }
    pub fn train_spring() -> f64 {
        train().spring
    }
    pub fn substeps() -> usize {
        1
    }
    pub fn smoothstep() -> String {
        "cubic_smoothstep".into()
    }
}

impl ModelSpec {
    pub fn pendulum_params(&self) -> Option<PendulumParams> {
        match *self {
            ModelSpec::Pendulum {
                length,
                mass,
                friction,
                gravity,
            } => Some(PendulumParams {
                length,
                mass,
                friction,
                gravity,
            }),
            _ => None,
        }
    }

    pub fn cart_train_params(&self) -> Option<CartTrainParams> {
        match *self {
            ModelSpec::CartTrain {
                carts,
                length,
                pendulum_mass,
                cart_mass,
                pendulum_damping,
                cart_damping,
                spring,
                gravity,
                coupling,
            } => Some(CartTrainParams {
                carts,
                length,
                pendulum_mass,
                cart_mass,
                pendulum_damping,
                cart_damping,
                spring,
                gravity,
                coupling,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSpec {
    /// Seconds.
    pub duration: f64,
    /// Sampling period, seconds.
    pub delta: f64,
    /// RK4 substeps per sampling period.
    #[serde(default = "defaults::substeps")]
    pub substeps: usize,
}

impl HorizonSpec {
    /// Number of samples `T = duration / delta`; must be a positive integer.
    pub fn steps(&self) -> Result<usize, CliError> {
        if !(self.duration > 0.0 && self.delta > 0.0) {
            return Err(CliError::config("horizon", "duration and delta must be positive"));
        }
        let ratio = self.duration / self.delta;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) || steps < 1.0 {
            return Err(CliError::config(
                "horizon",
                format!("duration / delta = {ratio} is not a positive integer"),
            ));
        }
        Ok(steps as usize)
    }
}

/// A weight matrix given by its diagonal or by full rows.
///
/// `tile = true` repeats a short diagonal block to fill the dimension (one
/// block per cart for the train).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum MatrixSpec {
    Diagonal {
        diag: Vec<f64>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        tile: bool,
    },
    Full {
        rows: Vec<Vec<f64>>,
    },
}

impl MatrixSpec {
    pub fn build(&self, dim: usize, field: &str) -> Result<Matrix, CliError> {
        let m = match self {
            MatrixSpec::Diagonal { diag, tile } => {
                let block = diag.len();
                let ok = if *tile {
                    block > 0 && dim % block == 0
                } else {
                    block == dim
                };
                if !ok {
                    return Err(CliError::config(
                        field,
                        format!("diagonal of length {block} does not fit dimension {dim}"),
                    ));
                }
                Matrix::from_diagonal(&Vector::from_fn(dim, |i, _| diag[i % block]))
            }
            MatrixSpec::Full { rows } => rows_to_matrix(rows, field, Some((dim, dim)))?,
        };
        if m.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config(field, "entries must be finite"));
        }
        Ok(m)
    }
}

pub fn rows_to_matrix(
    rows: &[Vec<f64>],
    field: &str,
    shape: Option<(usize, usize)>,
) -> Result<Matrix, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(CliError::config(field, "rows must be non-empty and of equal length"));
    }
    if let Some((er, ec)) = shape {
        if (r, c) != (er, ec) {
            return Err(CliError::config(field, format!("expected {er}x{ec}, got {r}x{c}")));
        }
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalKeyword {
    /// Stabilizing solution of the algebraic Riccati equation at the
    /// equilibrium `x = 0`.
    #[serde(alias = "dare-terminal")]
    Dare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TerminalSpec {
    Keyword(TerminalKeyword),
    Matrix(MatrixSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub q: MatrixSpec,
    pub r: MatrixSpec,
    pub qf: TerminalSpec,
    pub reference: ReferenceSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegulatorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qf: Option<TerminalSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    /// Piecewise-constant reference switching at `switch_time` (default:
    /// half the horizon). Missing inputs default to the model's equilibrium
    /// input at the corresponding state.
    Step {
        x_initial: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u_initial: Option<Vec<f64>>,
        x_final: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u_final: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        switch_time: Option<f64>,
    },
    /// Every pendulum angle moves from `+amplitude_deg` to `-amplitude_deg`
    /// over the middle half of the horizon; the angular rate reference is
    /// the analytic derivative; everything else is zero.
    Swing {
        amplitude_deg: f64,
        #[serde(default = "defaults::smoothstep")]
        profile: String,
    },
    /// Reference read from a CSV with `x_*` and `u_*` columns (T + 1 rows,
    /// the last row's inputs empty), e.g. a previous run's trajectory.csv.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCurveKind {
    /// `alpha_t = x_init`, `mu_t = u_init` for all t.
    #[default]
    Constant,
    /// The reference itself.
    Reference,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    /// Initial state; zero when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_init: Option<Vec<f64>>,
    /// Input of the constant initial curve; the equilibrium input at
    /// `x_init` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_init: Option<Vec<f64>>,
    #[serde(default)]
    pub curve: InitialCurveKind,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Reads and parses `path`; relative reference files are resolved
    /// against the config's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let ReferenceSpec::File { path: file } = &mut cfg.cost.reference {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
            if !file.exists() {
                return Err(CliError::config(
                    "cost.reference.path",
                    format!("{} does not exist", file.display()),
                ));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
