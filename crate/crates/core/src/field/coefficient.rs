//! Closed-form time coefficients `r(t)`, `K(t)`, `S(t)`, ... as small
//! expression trees.

use super::profile::TransitionProfile;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientFn {
    Const {
        value: f64,
    },
    /// `amplitude · sin²(frequency · t + phase)`.
    Sin2 {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amplitude · cos²(frequency · t + phase)`.
    Cos2 {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amplitude · arctan(rate · (t − center))`.
    Arctan {
        amplitude: f64,
        rate: f64,
        #[serde(default)]
        center: f64,
    },
    /// `amplitude · exp(−(t − center)² / width)`.
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    Sum {
        terms: Vec<CoefficientFn>,
    },
    Product {
        factors: Vec<CoefficientFn>,
    },
    /// Requires the denominator's range to exclude zero for a finite bound.
    Quotient {
        numerator: Box<CoefficientFn>,
        denominator: Box<CoefficientFn>,
    },
    /// `inner(scale · t + shift)`.
    Rescale {
        inner: Box<CoefficientFn>,
        scale: f64,
        #[serde(default)]
        shift: f64,
    },
    /// `Γ(t)` of a transition profile.
    Transition {
        profile: TransitionProfile,
    },
    /// `Γ'(t)`; the profile must have a closed-form derivative.
    TransitionRate {
        profile: TransitionProfile,
    },
}

impl CoefficientFn {
    pub fn constant(value: f64) -> Self {
        Self::Const { value }
    }

    pub fn sin2(amplitude: f64, frequency: f64) -> Self {
        Self::Sin2 {
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    pub fn cos2(amplitude: f64, frequency: f64) -> Self {
        Self::Cos2 {
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    pub fn sum(terms: Vec<CoefficientFn>) -> Self {
        Self::Sum { terms }
    }

    pub fn product(factors: Vec<CoefficientFn>) -> Self {
        Self::Product { factors }
    }

    pub fn quotient(numerator: CoefficientFn, denominator: CoefficientFn) -> Self {
        Self::Quotient {
            numerator: Box::new(numerator),
            denominator: Box::new(denominator),
        }
    }

    pub fn rescale(self, scale: f64, shift: f64) -> Self {
        Self::Rescale {
            inner: Box::new(self),
            scale,
            shift,
        }
    }

    /// `c + a·sin²(ωt)` and similar offsets read better in builders.
    pub fn offset(self, c: f64) -> Self {
        Self::sum(vec![Self::constant(c), self])
    }

    pub fn times(self, other: CoefficientFn) -> Self {
        Self::product(vec![self, other])
    }

    pub fn scaled(self, w: f64) -> Self {
        Self::product(vec![Self::constant(w), self])
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Self::Const { value } => Some(*value),
            _ => None,
        }
    }

    /// True when the value does not depend on `t`.
    pub fn is_autonomous(&self) -> bool {
        match self {
            Self::Const { .. } => true,
            Self::Sin2 {
                amplitude,
                frequency,
                ..
            }
            | Self::Cos2 {
                amplitude,
                frequency,
                ..
            } => *amplitude == 0.0 || *frequency == 0.0,
            Self::Arctan {
                amplitude, rate, ..
            } => *amplitude == 0.0 || *rate == 0.0,
            Self::Gaussian { amplitude, .. } => *amplitude == 0.0,
            Self::Sum { terms } => terms.iter().all(Self::is_autonomous),
            Self::Product { factors } => factors.iter().all(Self::is_autonomous),
            Self::Quotient {
                numerator,
                denominator,
            } => numerator.is_autonomous() && denominator.is_autonomous(),
            Self::Rescale { inner, scale, .. } => *scale == 0.0 || inner.is_autonomous(),
            Self::Transition { profile } => matches!(profile, TransitionProfile::Constant { .. }),
            Self::TransitionRate { profile } => {
                matches!(profile, TransitionProfile::Constant { .. })
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Const { value } => *value,
            Self::Sin2 {
                amplitude,
                frequency,
                phase,
            } => {
                let s = (frequency * t + phase).sin();
                amplitude * s * s
            }
            Self::Cos2 {
                amplitude,
                frequency,
                phase,
            } => {
                let c = (frequency * t + phase).cos();
                amplitude * c * c
            }
            Self::Arctan {
                amplitude,
                rate,
                center,
            } => amplitude * (rate * (t - center)).atan(),
            Self::Gaussian {
                amplitude,
                width,
                center,
            } => {
                let u = t - center;
                amplitude * (-u * u / width).exp()
            }
            Self::Sum { terms } => terms.iter().map(|c| c.eval(t)).sum(),
            Self::Product { factors } => factors.iter().fold(1.0, |acc, c| acc * c.eval(t)),
            Self::Quotient {
                numerator,
                denominator,
            } => numerator.eval(t) / denominator.eval(t),
            Self::Rescale {
                inner,
                scale,
                shift,
            } => inner.eval(scale * t + shift),
            Self::Transition { profile } => profile.eval(t),
            Self::TransitionRate { profile } => profile.derivative(t).unwrap_or(f64::NAN),
        }
    }

    /// An interval containing every value, from interval arithmetic over
    /// the tree. May be unbounded for quotients whose denominator range
    /// contains zero.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Self::Const { value } => (*value, *value),
            Self::Sin2 { amplitude, .. } | Self::Cos2 { amplitude, .. } => ordered(0.0, *amplitude),
            Self::Arctan { amplitude, .. } => {
                let a = amplitude.abs() * FRAC_PI_2;
                (-a, a)
            }
            Self::Gaussian { amplitude, .. } => ordered(0.0, *amplitude),
            Self::Sum { terms } => terms.iter().fold((0.0, 0.0), |(lo, hi), c| {
                let (a, b) = c.range();
                (lo + a, hi + b)
            }),
            Self::Product { factors } => factors
                .iter()
                .fold((1.0, 1.0), |acc, c| mul_interval(acc, c.range())),
            Self::Quotient {
                numerator,
                denominator,
            } => {
                let (a, b) = denominator.range();
                if a <= 0.0 && b >= 0.0 {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    mul_interval(numerator.range(), ordered(1.0 / a, 1.0 / b))
                }
            }
            Self::Rescale { inner, .. } => inner.range(),
            Self::Transition { profile } => profile.range(),
            Self::TransitionRate { profile } => profile.clone().derivative_profile().range(),
        }
    }

    /// `sup |value(t)|` bound derived from [`CoefficientFn::range`].
    pub fn bound(&self) -> f64 {
        let (lo, hi) = self.range();
        lo.abs().max(hi.abs())
    }
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn mul_interval((a, b): (f64, f64), (c, d): (f64, f64)) -> (f64, f64) {
    let p = [a * c, a * d, b * c, b * d];
    p.iter()
        .filter(|v| !v.is_nan())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}
