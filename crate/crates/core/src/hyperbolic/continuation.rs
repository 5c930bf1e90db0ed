//! Continuation of a hyperbolic solution of `x' = h(t, x)` to a nearby
//! field `x' = g(t, x)` by fixed-point iteration of
//! `T y(t) = ∫_{−∞}^t u(t) u⁻¹(s) r_g(s, y(s)) ds`,
//! `r_g(t, y) = g(t, x̃ + y) − h(t, x̃) − h_x(t, x̃) y`.

use super::dichotomy::{dichotomy_exponent_on, Hyperbolicity, DEFAULT_MARGIN};
use crate::field::ScalarField;
use crate::integrator::Trajectory;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

pub const KERNEL_CUTOFF: f64 = 1e-12;
pub const FIXED_POINT_TOL: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 200;
/// Largest grid spacing of the quadrature.
pub const GRID_STEP: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct Continuation {
    /// `x̃ + y` on the part of the base span where the truncated kernel is negligible.
    pub solution: Trajectory,
    /// `sup |y|` over the returned span.
    pub correction_norm: f64,
    /// `sup_{t, |x| ≤ ρ} (|g − h| + |g_x − h_x|)` on the grid.
    pub perturbation_norm: f64,
    pub iterations: usize,
    pub base_type: Hyperbolicity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSummary {
    pub span: (f64, f64),
    pub correction_norm: f64,
    pub perturbation_norm: f64,
    pub iterations: usize,
    pub base_type: Hyperbolicity,
}

impl Continuation {
    pub fn summary(&self) -> ContinuationSummary {
        ContinuationSummary {
            span: (self.solution.start(), self.solution.end()),
            correction_norm: self.correction_norm,
            perturbation_norm: self.perturbation_norm,
            iterations: self.iterations,
            base_type: self.base_type,
        }
    }
}

/// `(e^z − 1)/z` and `(e^z − 1 − z)/z²`.
fn phi12(z: f64) -> (f64, f64) {
    if z.abs() < 1e-3 {
        (
            1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0,
            0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0,
        )
    } else {
        let e = z.exp_m1();
        (e / z, (e - z) / (z * z))
    }
}

pub fn continue_hyperbolic(
    base_field: &ScalarField,
    base_solution: &Trajectory,
    perturbed_field: &ScalarField,
    rho: f64,
) -> Result<Continuation> {
    let span = (base_solution.start(), base_solution.end());
    let window = ((span.1 - span.0) / 4.0).min(50.0);
    let est = dichotomy_exponent_on(base_solution, span, window, DEFAULT_MARGIN)?;
    if est.classification == Hyperbolicity::Indeterminate {
        return Err(Error::NotHyperbolic(format!(
            "window averages in [{:.3e}, {:.3e}]",
            est.inf, est.sup
        )));
    }
    let forward = est.classification == Hyperbolicity::Attractive;

    // Base samples refined to spacing ≤ GRID_STEP.
    let mut times = Vec::new();
    let base_times = base_solution.times();
    for w in base_times.windows(2) {
        let pieces = ((w[1] - w[0]) / GRID_STEP).ceil().max(1.0) as usize;
        for j in 0..pieces {
            times.push(w[0] + (w[1] - w[0]) * j as f64 / pieces as f64);
        }
    }
    times.push(span.1);
    let n = times.len();
    let xb: Vec<f64> = times
        .iter()
        .map(|&t| base_solution.at(t))
        .collect::<Result<_>>()?;
    let ib: Vec<f64> = times
        .iter()
        .map(|&t| base_solution.integral_at(t))
        .collect::<Result<_>>()?;
    let (hb, hxb): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&xb)
        .map(|(&t, &x)| base_field.value_and_slope(t, x))
        .unzip();

    let weights: Vec<(f64, f64, f64)> = (0..n - 1)
        .map(|i| {
            let h = times[i + 1] - times[i];
            let a = ib[i + 1] - ib[i];
            let z = if forward { a } else { -a };
            let (p1, p2) = phi12(z);
            (z.exp(), h * (p1 - p2), h * p2)
        })
        .collect();

    let residual = |y: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| perturbed_field.eval(times[i], xb[i] + y[i], 0) - hb[i] - hxb[i] * y[i])
            .collect()
    };

    let mut y = vec![0.0; n];
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let r = residual(&y);
        let mut next = vec![0.0; n];
        if forward {
            for i in 0..n - 1 {
                let (e, w_near, w_far) = weights[i];
                // w_near multiplies the sample at the start of the step.
                next[i + 1] = e * next[i] + w_near * r[i] + w_far * r[i + 1];
            }
        } else {
            for i in (0..n - 1).rev() {
                let (e, w_near, w_far) = weights[i];
                next[i] = e * next[i + 1] - (w_near * r[i + 1] + w_far * r[i]);
            }
        }
        last_step = next
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if !last_step.is_finite() {
            break;
        }
        y = next;
        if last_step < FIXED_POINT_TOL {
            break;
        }
    }
    if !(last_step < FIXED_POINT_TOL) {
        return Err(Error::ContractionFailed {
            iterations,
            last_step,
        });
    }

    // Keep the part where the kernel from the truncation point is negligible.
    let valid: Vec<usize> = (0..n)
        .filter(|&i| {
            let k = if forward {
                (ib[i] - ib[0]).exp()
            } else {
                (ib[i] - ib[n - 1]).exp()
            };
            k < KERNEL_CUTOFF
        })
        .collect();
    if valid.len() < 2 {
        return Err(Error::InsufficientSpan {
            needed: f64::NAN,
            available: span.1 - span.0,
        });
    }
    let ts: Vec<f64> = valid.iter().map(|&i| times[i]).collect();
    let xs: Vec<f64> = valid.iter().map(|&i| xb[i] + y[i]).collect();
    let (dx, dix): (Vec<f64>, Vec<f64>) = ts
        .iter()
        .zip(&xs)
        .map(|(&t, &x)| perturbed_field.value_and_slope(t, x))
        .unzip();
    let mut ints = vec![0.0; ts.len()];
    for i in 1..ts.len() {
        ints[i] = ints[i - 1] + 0.5 * (ts[i] - ts[i - 1]) * (dix[i] + dix[i - 1]);
    }
    let correction_norm = valid.iter().map(|&i| y[i].abs()).fold(0.0, f64::max);
    let solution = Trajectory::from_samples(ts, xs, &dx, ints, &dix)?;

    let perturbation_norm = perturbation_norm(base_field, perturbed_field, &times, rho);
    Ok(Continuation {
        solution,
        correction_norm,
        perturbation_norm,
        iterations,
        base_type: est.classification,
    })
}

/// `sup (|g − h| + |g_x − h_x|)` over the given times and a 41-point `x` grid on `[−ρ, ρ]`.
pub fn perturbation_norm(h: &ScalarField, g: &ScalarField, times: &[f64], rho: f64) -> f64 {
    let stride = (times.len() / 400).max(1);
    let mut worst: f64 = 0.0;
    for &t in times.iter().step_by(stride) {
        let hs = h.slice(t);
        let gs = g.slice(t);
        for j in 0..=40 {
            let x = -rho + 2.0 * rho * j as f64 / 40.0;
            let d = (gs.eval(x, 0) - hs.eval(x, 0)).abs() + (gs.eval(x, 1) - hs.eval(x, 1)).abs();
            worst = worst.max(d);
        }
    }
    worst
}
