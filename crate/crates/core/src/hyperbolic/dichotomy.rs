//! Exponential-dichotomy estimates from the accumulated `∫ h_x` column.

use crate::integrator::Trajectory;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_MARGIN: f64 = 1e-3;
pub const DEFAULT_WINDOW: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hyperbolicity {
    Attractive,
    Repulsive,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyEstimate {
    pub window: f64,
    pub margin: f64,
    pub span: (f64, f64),
    /// Averages over the sliding windows of length exactly `window`.
    pub averages: Vec<f64>,
    /// Sup and inf over every sampled window of length at least `window`.
    pub sup: f64,
    pub inf: f64,
    pub classification: Hyperbolicity,
    /// Fitted `(k, β)` of the defining inequality, when hyperbolic.
    pub k: Option<f64>,
    pub beta: Option<f64>,
}

impl DichotomyEstimate {
    pub fn is_attractive(&self) -> bool {
        self.classification == Hyperbolicity::Attractive
    }

    pub fn is_repulsive(&self) -> bool {
        self.classification == Hyperbolicity::Repulsive
    }

    /// The exponent closest to zero, signed: `sup` if attractive, `inf` if
    /// repulsive, the mean of the window averages otherwise.
    pub fn exponent(&self) -> f64 {
        match self.classification {
            Hyperbolicity::Attractive => self.sup,
            Hyperbolicity::Repulsive => self.inf,
            Hyperbolicity::Indeterminate => {
                self.averages.iter().sum::<f64>() / self.averages.len() as f64
            }
        }
    }
}

/// Dichotomy estimate over the whole trajectory with the default margin.
pub fn dichotomy_exponent(traj: &Trajectory, window: f64) -> Result<DichotomyEstimate> {
    dichotomy_exponent_on(traj, (traj.start(), traj.end()), window, DEFAULT_MARGIN)
}

pub fn dichotomy_exponent_on(
    traj: &Trajectory,
    span: (f64, f64),
    window: f64,
    margin: f64,
) -> Result<DichotomyEstimate> {
    let (a, b) = (span.0.max(traj.start()), span.1.min(traj.end()));
    if !(window > 0.0) || !(margin >= 0.0) {
        return Err(Error::InvalidArgument(
            "dichotomy window must be positive and margin nonnegative".into(),
        ));
    }
    if b - a < 4.0 * window * (1.0 - 1e-12) {
        return Err(Error::InsufficientSpan {
            needed: 4.0 * window,
            available: (b - a).max(0.0),
        });
    }
    // Grid of window/20 with the window an exact multiple of the step.
    let per_window = 20usize;
    let step = window / per_window as f64;
    let n = ((b - a) / step).floor() as usize;
    let times: Vec<f64> = (0..=n).map(|i| a + i as f64 * step).collect();
    let ints: Vec<f64> = times
        .iter()
        .map(|&t| traj.integral_at(t))
        .collect::<Result<_>>()?;

    let averages: Vec<f64> = (0..=n - per_window)
        .map(|i| (ints[i + per_window] - ints[i]) / window)
        .collect();
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for i in 0..=n {
        for j in i + per_window..=n {
            let avg = (ints[j] - ints[i]) / (times[j] - times[i]);
            sup = sup.max(avg);
            inf = inf.min(avg);
        }
    }
    let classification = if sup < -margin {
        Hyperbolicity::Attractive
    } else if inf > margin {
        Hyperbolicity::Repulsive
    } else {
        Hyperbolicity::Indeterminate
    };

    let (k, beta) = match classification {
        Hyperbolicity::Indeterminate => (None, None),
        c => {
            let beta = if c == Hyperbolicity::Attractive {
                sup.abs() - margin
            } else {
                inf.abs() - margin
            };
            let sign = if c == Hyperbolicity::Attractive {
                1.0
            } else {
                -1.0
            };
            let mut k: f64 = 1.0;
            for i in 0..=n {
                for j in i + 1..=n {
                    let e = sign * (ints[j] - ints[i]) + beta * (times[j] - times[i]);
                    k = k.max(e.exp());
                }
            }
            (Some(k), Some(beta))
        }
    };
    Ok(DichotomyEstimate {
        window,
        margin,
        span: (a, b),
        averages,
        sup,
        inf,
        classification,
        k,
        beta,
    })
}

/// `min |a(t) − b(t)|` over the union of both sample grids on the common span.
pub fn uniform_separation(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    uniform_separation_on(a, b, f64::NEG_INFINITY, f64::INFINITY)
}

pub fn uniform_separation_on(a: &Trajectory, b: &Trajectory, from: f64, to: f64) -> Result<f64> {
    let lo = from.max(a.start()).max(b.start());
    let hi = to.min(a.end()).min(b.end());
    if lo > hi {
        return Err(Error::InsufficientSpan {
            needed: 0.0,
            available: hi - lo,
        });
    }
    let mut best = f64::INFINITY;
    for t in a
        .times()
        .iter()
        .chain(b.times())
        .copied()
        .filter(|&t| t >= lo && t <= hi)
        .chain([lo, hi])
    {
        best = best.min((a.at(t)? - b.at(t)?).abs());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::integrator::{integrate, IntegratorSettings};

    fn linear(a: f64) -> Trajectory {
        let f = ScalarField::polynomial([0.0, a, 0.0, 0.0]);
        integrate(&f, 0.0, 0.0, 300.0, &IntegratorSettings::default()).unwrap()
    }

    #[test]
    fn constant_coefficient_exponents() {
        for a in [-2.0, -0.5, 0.5, 2.0] {
            let est = dichotomy_exponent(&linear(a), 5.0).unwrap();
            assert!((est.sup - a).abs() < 1e-9 && (est.inf - a).abs() < 1e-9);
            let expected = if a < 0.0 {
                Hyperbolicity::Attractive
            } else {
                Hyperbolicity::Repulsive
            };
            assert_eq!(est.classification, expected);
            assert!((est.beta.unwrap() - (a.abs() - DEFAULT_MARGIN)).abs() < 1e-9);
            assert!(est.k.unwrap() >= 1.0);
        }
    }

    #[test]
    fn fitted_pair_satisfies_the_bound() {
        let f = ScalarField::power(crate::field::CoefficientFn::sin2(2.0, 1.0).offset(-1.5), 1);
        let tr = integrate(&f, 0.0, 0.0, 400.0, &IntegratorSettings::default()).unwrap();
        let est = dichotomy_exponent(&tr, 20.0).unwrap();
        assert!(est.is_attractive());
        let (k, beta) = (est.k.unwrap(), est.beta.unwrap());
        for i in 0..400 {
            for j in (i..400).step_by(7) {
                let (s, t) = (i as f64, j as f64);
                let lhs = (tr.integral_at(t).unwrap() - tr.integral_at(s).unwrap()).exp();
                assert!(lhs <= k * (-beta * (t - s)).exp() * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn short_span_is_rejected() {
        assert!(matches!(
            dichotomy_exponent(&linear(-1.0), 100.0),
            Err(Error::InsufficientSpan { .. })
        ));
    }

    #[test]
    fn separation_of_constants() {
        let f = ScalarField::polynomial([0.0, 1.0, 0.0, -1.0]);
        let s = IntegratorSettings::default();
        let up = integrate(&f, 0.0, 1.0, 10.0, &s).unwrap();
        let down = integrate(&f, 0.0, -1.0, 10.0, &s).unwrap();
        assert!((uniform_separation(&up, &down).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(uniform_separation(&up, &up).unwrap(), 0.0);
    }
}
