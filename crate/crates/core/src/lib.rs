//! Tracking and tipping analysis for scalar nonautonomous transition
//! equations `x' = f(t, x, Γ(t))` with d-concave, coercive right-hand sides.

pub mod classify;
mod error;
pub mod field;
pub mod hyperbolic;
pub mod integrator;
pub mod models;
pub mod tipping;

pub use error::{Error, Result};
