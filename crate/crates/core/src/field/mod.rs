//! Right-hand sides, parametric families and transition profiles.

mod audit;
mod coefficient;
mod family;
mod profile;
mod scalar;

pub use audit::{
    coercivity_radius, coercivity_radius_on, family_radius, hypothesis_audit, AuditGrids,
    AuditReport, Check, Witness, H5_THRESHOLD,
};
pub use coefficient::CoefficientFn;
pub use family::{Monotonicity, ParametricFamily};
pub use profile::{SplitSide, TransitionProfile};
pub use scalar::{FieldSlice, ScalarField, Shape, Term};
