//! Parametric families `f(t, x, γ) = base(t, x) + γ · direction(t, x)`,
//! their frozen fields `f_γ` and transition fields `f_Γ`.

use super::coefficient::CoefficientFn;
use super::profile::TransitionProfile;
use super::scalar::ScalarField;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
    #[default]
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametricFamily {
    pub base: ScalarField,
    pub direction: ScalarField,
    /// Declared monotonicity of `γ ↦ f(t, x, γ)`; checked by the audit.
    #[serde(default)]
    pub monotonicity: Monotonicity,
}

impl ParametricFamily {
    pub fn new(base: ScalarField, direction: ScalarField, monotonicity: Monotonicity) -> Self {
        Self {
            base,
            direction,
            monotonicity,
        }
    }

    /// `base + γ` (additive constant forcing), nondecreasing in `γ`.
    pub fn additive(base: ScalarField) -> Self {
        Self::new(
            base,
            ScalarField::polynomial([1.0, 0.0, 0.0, 0.0]),
            Monotonicity::Nondecreasing,
        )
    }

    /// `(t, x) ↦ f(t, x, γ)`.
    pub fn freeze(&self, gamma: f64) -> ScalarField {
        self.base
            .plus(&self.direction.weighted(&CoefficientFn::constant(gamma)))
    }

    /// `(t, x) ↦ f(t, x, Γ(t))`.
    pub fn compose(&self, profile: &TransitionProfile) -> ScalarField {
        if let TransitionProfile::Constant { value } = profile {
            return self.freeze(*value);
        }
        self.base
            .plus(&self.direction.weighted(&CoefficientFn::Transition {
                profile: profile.clone(),
            }))
    }

    pub fn is_autonomous(&self) -> bool {
        self.base.is_autonomous() && self.direction.is_autonomous()
    }
}
