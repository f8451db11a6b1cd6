use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Solver loop to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gradient,
    Cg,
    HeavyBall,
    Nesterov,
    OpenLoopGradient,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Gradient,
        Method::Cg,
        Method::HeavyBall,
        Method::Nesterov,
        Method::OpenLoopGradient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gradient => "gradient",
            Method::Cg => "cg",
            Method::HeavyBall => "heavy_ball",
            Method::Nesterov => "nesterov",
            Method::OpenLoopGradient => "open_loop_gradient",
        }
    }

    /// Heavy-ball and Nesterov are not descent methods and run with a fixed step.
    pub fn requires_constant_step(self) -> bool {
        matches!(self, Method::HeavyBall | Method::Nesterov)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown method `{s}` (expected one of: {})",
                    Method::ALL.map(Method::name).join(", ")
                )
            })
    }
}

/// Step-size selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepRule {
    /// Backtracking: largest `gamma0 * beta^j` satisfying the sufficient
    /// decrease condition `J(z + gamma d) <= J(z) + slope * gamma * grad'd`.
    Armijo {
        #[serde(default = "defaults::gamma0")]
        gamma0: f64,
        #[serde(default = "defaults::beta")]
        beta: f64,
        #[serde(default = "defaults::slope")]
        slope: f64,
        #[serde(default = "defaults::max_backtracks")]
        max_backtracks: usize,
    },
    Constant { gamma: f64 },
}

impl StepRule {
    pub fn armijo() -> Self {
        StepRule::Armijo {
            gamma0: defaults::gamma0(),
            beta: defaults::beta(),
            slope: defaults::slope(),
            max_backtracks: defaults::max_backtracks(),
        }
    }
}

impl Default for StepRule {
    fn default() -> Self {
        Self::armijo()
    }
}

/// When the feedback gains are recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainPolicy {
    /// Re-solve the regulator problem about the current trajectory at the
    /// start of every iteration.
    #[default]
    RefreshEachIter,
    /// Keep the gains computed about the initial curve for the whole run.
    Frozen,
}

mod defaults {
    pub fn gamma0() -> f64 {
        1.0
    }
    pub fn beta() -> f64 {
        0.5
    }
    pub fn slope() -> f64 {
        1e-4
    }
    pub fn max_backtracks() -> usize {
        60
    }
    pub fn gamma_hb() -> f64 {
        0.5
    }
    pub fn cg_restart_threshold() -> f64 {
        0.7
    }
    pub fn max_iters() -> usize {
        1000
    }
    pub fn grad_tol() -> f64 {
        1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    #[serde(default)]
    pub step_rule: StepRule,
    /// Heavy-ball momentum weight.
    #[serde(default = "defaults::gamma_hb")]
    pub gamma_hb: f64,
    /// CG restarts when `|g_{k+1}' g_k| > threshold * ||g_k||^2`.
    #[serde(default = "defaults::cg_restart_threshold")]
    pub cg_restart_threshold: f64,
    /// Force the CG combination coefficients to zero (every step a gradient step).
    #[serde(default)]
    pub cg_zero_rho: bool,
    #[serde(default = "defaults::max_iters")]
    pub max_iters: usize,
    /// Stop once the squared gradient norm is at most this value.
    #[serde(default = "defaults::grad_tol")]
    pub grad_tol: f64,
    #[serde(default)]
    pub gain_policy: GainPolicy,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        let step_rule = if method.requires_constant_step() {
            StepRule::Constant { gamma: 0.005 }
        } else {
            StepRule::armijo()
        };
        Self {
            method,
            step_rule,
            gamma_hb: defaults::gamma_hb(),
            cg_restart_threshold: defaults::cg_restart_threshold(),
            cg_zero_rho: false,
            max_iters: defaults::max_iters(),
            grad_tol: defaults::grad_tol(),
            gain_policy: GainPolicy::default(),
        }
    }

    pub fn with_method(&self, method: Method) -> Self {
        Self {
            method,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.step_rule {
            StepRule::Armijo {
                gamma0,
                beta,
                slope,
                ..
            } => {
                if !(gamma0 > 0.0 && gamma0.is_finite()) {
                    return Err(format!("armijo gamma0 must be positive, got {gamma0}"));
                }
                if !(beta > 0.0 && beta < 1.0) {
                    return Err(format!("armijo beta must lie in (0, 1), got {beta}"));
                }
                if !(slope > 0.0 && slope < 1.0) {
                    return Err(format!("armijo slope must lie in (0, 1), got {slope}"));
                }
                if self.method.requires_constant_step() {
                    return Err(format!("{} requires a constant step rule", self.method));
                }
            }
            StepRule::Constant { gamma } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(format!("constant step must be positive, got {gamma}"));
                }
            }
        }
        if !(self.gamma_hb >= 0.0 && self.gamma_hb.is_finite()) {
            return Err(format!("gamma_hb must be non-negative, got {}", self.gamma_hb));
        }
        if !(self.cg_restart_threshold > 0.0 && self.cg_restart_threshold <= 1.0) {
            return Err(format!(
                "cg_restart_threshold must lie in (0, 1], got {}",
                self.cg_restart_threshold
            ));
        }
        if self.max_iters == 0 {
            return Err("max_iters must be at least 1".into());
        }
        if !(self.grad_tol >= 0.0) {
            return Err(format!("grad_tol must be non-negative, got {}", self.grad_tol));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("newton".parse::<Method>().is_err());
    }

    #[test]
    fn validation() {
        assert!(SolverConfig::new(Method::Gradient).validate().is_ok());
        assert!(SolverConfig::new(Method::HeavyBall).validate().is_ok());

        let mut cfg = SolverConfig::new(Method::Nesterov);
        cfg.step_rule = StepRule::armijo();
        assert!(cfg.validate().is_err());

        let mut cfg = SolverConfig::new(Method::Gradient);
        cfg.step_rule = StepRule::Armijo {
            gamma0: 1.0,
            beta: 1.0,
            slope: 1e-4,
            max_backtracks: 10,
        };
        assert!(cfg.validate().is_err());

        let mut cfg = SolverConfig::new(Method::Cg);
        cfg.cg_restart_threshold = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = SolverConfig::new(Method::Gradient);
        cfg.max_iters = 0;
        assert!(cfg.validate().is_err());
    }
}
