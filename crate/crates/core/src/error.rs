use thiserror::Error;

/// Errors produced by the problem model, projection and gain synthesis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid horizon: T={steps}, n={state_dim}, m={input_dim} (all must be >= 1)")]
    InvalidHorizon {
        steps: usize,
        state_dim: usize,
        input_dim: usize,
    },

    #[error("dimension mismatch in {what} at index {index}: expected {expected}, got {found}")]
    Dimension {
        what: &'static str,
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("switch index {index} out of range 0..={steps}")]
    SwitchIndexOutOfRange { index: usize, steps: usize },

    #[error("rollout diverged at timestep {timestep} (state max-norm {norm:e})")]
    Divergence { timestep: usize, norm: f64 },

    #[error("singular matrix at timestep {timestep} in {what}")]
    Singular { what: &'static str, timestep: usize },

    #[error("algebraic Riccati iteration did not converge after {iterations} iterations (last change {change:e})")]
    RiccatiNotConverged { iterations: usize, change: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, index: usize, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            index,
            expected,
            found,
        })
    }
}
