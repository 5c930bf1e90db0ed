//! Scalar right-hand sides `h(t, x)`: a cubic polynomial in `x` with
//! time-dependent coefficients plus Holling-type rational terms.

use super::coefficient::CoefficientFn;
use serde::{Deserialize, Serialize};

/// The `x`-dependence of one term; the term's value is `coefficient(t) · shape(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Shape {
    /// `x^degree`, `degree ≤ 3`.
    Power { degree: u8 },
    /// `x / (x + b(t))`, defined for `x > −b(t)`.
    HollingII { half_saturation: CoefficientFn },
    /// `x² / (β + x²)`, `β > 0`.
    HollingIII { beta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coefficient: CoefficientFn,
    pub shape: Shape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScalarField {
    pub terms: Vec<Term>,
}

impl ScalarField {
    pub fn new(terms: Vec<Term>) -> crate::Result<Self> {
        for term in &terms {
            match &term.shape {
                Shape::Power { degree } if *degree > 3 => {
                    return Err(crate::Error::InvalidArgument(format!(
                        "polynomial degree {degree} exceeds 3"
                    )))
                }
                Shape::HollingIII { beta } if !(*beta > 0.0) => {
                    return Err(crate::Error::InvalidArgument(format!(
                        "Holling III saturation constant must be positive, got {beta}"
                    )))
                }
                _ => {}
            }
        }
        Ok(Self { terms })
    }

    /// Autonomous polynomial `c[0] + c[1] x + c[2] x² + c[3] x³`.
    pub fn polynomial(c: [f64; 4]) -> Self {
        let terms = c
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, v)| Term {
                coefficient: CoefficientFn::constant(*v),
                shape: Shape::Power { degree: k as u8 },
            })
            .collect();
        Self { terms }
    }

    pub fn power(coefficient: CoefficientFn, degree: u8) -> Self {
        assert!(degree <= 3, "polynomial degree exceeds 3");
        Self {
            terms: vec![Term {
                coefficient,
                shape: Shape::Power { degree },
            }],
        }
    }

    pub fn holling2(weight: CoefficientFn, half_saturation: CoefficientFn) -> Self {
        Self {
            terms: vec![Term {
                coefficient: weight,
                shape: Shape::HollingII { half_saturation },
            }],
        }
    }

    pub fn holling3(weight: CoefficientFn, beta: f64) -> Self {
        Self {
            terms: vec![Term {
                coefficient: weight,
                shape: Shape::HollingIII { beta },
            }],
        }
    }

    /// `self + other`.
    pub fn plus(&self, other: &ScalarField) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    /// `w(t) · self`.
    pub fn weighted(&self, w: &CoefficientFn) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|term| Term {
                coefficient: CoefficientFn::product(vec![w.clone(), term.coefficient.clone()]),
                shape: term.shape.clone(),
            })
            .collect();
        Self { terms }
    }

    /// `self + forcing(t)`.
    pub fn with_forcing(&self, forcing: CoefficientFn) -> Self {
        self.plus(&Self::power(forcing, 0))
    }

    pub fn is_autonomous(&self) -> bool {
        self.terms.iter().all(|term| {
            term.coefficient.is_autonomous()
                && match &term.shape {
                    Shape::HollingII { half_saturation } => half_saturation.is_autonomous(),
                    _ => true,
                }
        })
    }

    /// Interval containing the cubic coefficient.
    pub fn leading_range(&self) -> (f64, f64) {
        self.terms
            .iter()
            .filter(|term| term.shape == Shape::Power { degree: 3 })
            .fold((0.0, 0.0), |(lo, hi), term| {
                let (a, b) = term.coefficient.range();
                (lo + a, hi + b)
            })
    }

    /// `∂ₓⁿ h(t, x)` for `order = n ≤ 3`.
    pub fn eval(&self, t: f64, x: f64, order: usize) -> f64 {
        assert!(order <= 3, "only x-partials up to order 3 are available");
        self.terms
            .iter()
            .map(|term| {
                let c = term.coefficient.eval(t);
                if c == 0.0 {
                    return 0.0;
                }
                c * shape_partial(&term.shape, t, x, order)
            })
            .sum()
    }

    /// `(h(t, x), ∂ₓh(t, x))`, evaluating each coefficient once.
    pub fn value_and_slope(&self, t: f64, x: f64) -> (f64, f64) {
        let mut f = 0.0;
        let mut fx = 0.0;
        for term in &self.terms {
            let c = term.coefficient.eval(t);
            if c == 0.0 {
                continue;
            }
            match &term.shape {
                Shape::Power { degree } => {
                    let (p, dp) = match degree {
                        0 => (1.0, 0.0),
                        1 => (x, 1.0),
                        2 => (x * x, 2.0 * x),
                        _ => (x * x * x, 3.0 * x * x),
                    };
                    f += c * p;
                    fx += c * dp;
                }
                Shape::HollingII { half_saturation } => {
                    let b = half_saturation.eval(t);
                    let s = x + b;
                    f += c * x / s;
                    fx += c * b / (s * s);
                }
                Shape::HollingIII { beta } => {
                    let s = beta + x * x;
                    f += c * x * x / s;
                    fx += c * 2.0 * beta * x / (s * s);
                }
            }
        }
        (f, fx)
    }

    /// Coefficient values frozen at time `t`, for cheap repeated evaluation in `x`.
    pub fn slice(&self, t: f64) -> FieldSlice {
        let mut poly = [0.0; 4];
        let mut rational = Vec::new();
        for term in &self.terms {
            let c = term.coefficient.eval(t);
            match &term.shape {
                Shape::Power { degree } => poly[*degree as usize] += c,
                Shape::HollingII { half_saturation } => {
                    rational.push((c, RationalKind::HollingII(half_saturation.eval(t))))
                }
                Shape::HollingIII { beta } => rational.push((c, RationalKind::HollingIII(*beta))),
            }
        }
        FieldSlice { poly, rational }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum RationalKind {
    HollingII(f64),
    HollingIII(f64),
}

/// A [`ScalarField`] with its coefficients evaluated at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSlice {
    poly: [f64; 4],
    rational: Vec<(f64, RationalKind)>,
}

impl FieldSlice {
    pub fn eval(&self, x: f64, order: usize) -> f64 {
        let [a0, a1, a2, a3] = self.poly;
        let mut v = match order {
            0 => a0 + x * (a1 + x * (a2 + x * a3)),
            1 => a1 + x * (2.0 * a2 + 3.0 * x * a3),
            2 => 2.0 * a2 + 6.0 * x * a3,
            3 => 6.0 * a3,
            _ => panic!("only x-partials up to order 3 are available"),
        };
        for &(c, kind) in &self.rational {
            if c != 0.0 {
                v += c * rational_partial(kind, x, order);
            }
        }
        v
    }

    /// Adds `w · other` in place; used to combine base and direction slices.
    pub fn axpy(&self, w: f64, other: &FieldSlice) -> FieldSlice {
        let mut poly = self.poly;
        for (p, q) in poly.iter_mut().zip(other.poly) {
            *p += w * q;
        }
        let mut rational = self.rational.clone();
        rational.extend(other.rational.iter().map(|&(c, k)| (w * c, k)));
        FieldSlice { poly, rational }
    }
}

fn shape_partial(shape: &Shape, t: f64, x: f64, order: usize) -> f64 {
    match shape {
        Shape::Power { degree } => power_partial(*degree as i32, x, order as i32),
        Shape::HollingII { half_saturation } => {
            rational_partial(RationalKind::HollingII(half_saturation.eval(t)), x, order)
        }
        Shape::HollingIII { beta } => rational_partial(RationalKind::HollingIII(*beta), x, order),
    }
}

fn power_partial(k: i32, x: f64, n: i32) -> f64 {
    if n > k {
        return 0.0;
    }
    let falling: f64 = (0..n).map(|j| (k - j) as f64).product();
    falling * x.powi(k - n)
}

fn rational_partial(kind: RationalKind, x: f64, order: usize) -> f64 {
    match kind {
        RationalKind::HollingII(b) => {
            let s = x + b;
            match order {
                0 => x / s,
                1 => b / (s * s),
                2 => -2.0 * b / (s * s * s),
                _ => 6.0 * b / (s * s * s * s),
            }
        }
        RationalKind::HollingIII(beta) => {
            let x2 = x * x;
            let s = beta + x2;
            match order {
                0 => x2 / s,
                1 => 2.0 * beta * x / (s * s),
                2 => 2.0 * beta * (beta - 3.0 * x2) / (s * s * s),
                _ => 24.0 * beta * x * (x2 - beta) / (s * s * s * s),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> ScalarField {
        ScalarField::polynomial([0.0, 1.0, 0.0, -1.0])
    }

    #[test]
    fn polynomial_values_and_partials() {
        let f = cubic();
        assert_eq!(f.eval(0.0, 2.0, 0), -6.0);
        assert_eq!(f.eval(0.0, 1.0, 1), -2.0);
        assert_eq!(f.eval(0.0, 1.5, 2), -9.0);
        assert_eq!(f.eval(3.0, 1.5, 3), -6.0);
        assert_eq!(f.value_and_slope(0.0, 2.0), (-6.0, -11.0));
    }

    #[test]
    fn holling3_term_value() {
        let f = ScalarField::holling3(CoefficientFn::constant(-1.5), 800.0);
        assert!((f.eval(0.0, 10.0, 0) + 1.5 / 9.0).abs() < 1e-15);
    }

    fn finite_difference_agrees(f: &ScalarField, t: f64, x: f64) {
        let h = 1e-5;
        for order in 0..3 {
            let fd = (f.eval(t, x + h, order) - f.eval(t, x - h, order)) / (2.0 * h);
            let an = f.eval(t, x, order + 1);
            assert!(
                (fd - an).abs() <= 1e-6 * (1.0 + an.abs()),
                "order {order} at x = {x}: fd {fd} vs analytic {an}"
            );
        }
    }

    #[test]
    fn rational_partials_match_differences() {
        let w = CoefficientFn::cos2(0.5, 1.3).offset(1.0);
        let f = ScalarField::holling3(w.clone(), 3.0)
            .plus(&ScalarField::holling2(w, CoefficientFn::constant(2.0)))
            .plus(&cubic());
        for x in [-1.5, -0.3, 0.0, 0.7, 2.0, 5.0] {
            finite_difference_agrees(&f, 0.4, x);
        }
    }

    #[test]
    fn slice_matches_direct_evaluation() {
        let w = CoefficientFn::sin2(2.0, 0.7).offset(0.5);
        let f = ScalarField::holling3(w.clone(), 4.0)
            .plus(&ScalarField::power(w, 2))
            .plus(&cubic());
        let t = 1.7;
        let s = f.slice(t);
        for x in [-2.0, -0.1, 0.3, 3.0] {
            for order in 0..=3 {
                let a = f.eval(t, x, order);
                let b = s.eval(x, order);
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
            let (v, dv) = f.value_and_slope(t, x);
            assert!((v - s.eval(x, 0)).abs() < 1e-12 && (dv - s.eval(x, 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_terms() {
        assert!(ScalarField::new(vec![Term {
            coefficient: CoefficientFn::constant(1.0),
            shape: Shape::Power { degree: 4 },
        }])
        .is_err());
        assert!(ScalarField::new(vec![Term {
            coefficient: CoefficientFn::constant(1.0),
            shape: Shape::HollingIII { beta: 0.0 },
        }])
        .is_err());
    }

    #[test]
    fn leading_range_sums_cubic_terms() {
        let f = cubic().plus(&ScalarField::power(CoefficientFn::sin2(-2.0, 1.0), 3));
        assert_eq!(f.leading_range(), (-3.0, -1.0));
        assert!(f.weighted(&CoefficientFn::constant(2.0)).eval(0.0, 2.0, 0) == -12.0);
    }
}
