//! First-order trajectory optimization for discrete-time nonlinear optimal
//! control, with the search carried out over state-input curves and every
//! iterate mapped back onto the trajectory manifold by a closed-loop
//! projection.
//!
//! The building blocks are:
//!
//! * [`ocp`]: problem data model (curves, trajectories, dynamics and cost contracts);
//! * [`models`]: benchmark dynamics and RK4 discretization;
//! * [`projection`]: the closed-loop projection operator;
//! * [`lqr`]: linearization and Riccati gain synthesis;
//! * [`costate`]: adjoint sweeps yielding exact reduced-cost gradients;
//! * [`solvers`]: gradient, conjugate-gradient, heavy-ball, Nesterov and
//!   open-loop solver loops.

pub mod costate;
pub mod error;
pub mod lqr;
pub mod models;
pub mod ocp;
pub mod oracle;
pub mod projection;
pub mod solvers;

pub use error::{Error, Result};
