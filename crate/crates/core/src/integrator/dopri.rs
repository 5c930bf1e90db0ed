//! Dormand–Prince 5(4) with dense output, augmented by the variational
//! integral `I' = h_x(t, x)`.

use super::trajectory::{Direction, Segment, Status, Trajectory};
use crate::field::ScalarField;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Blow-up guard radius; callers that know `ρ` set `4ρ`.
    pub guard_radius: Option<f64>,
    /// Grid step for resampled output.
    pub dense_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.5,
            min_step: 1e-12,
            guard_radius: None,
            dense_step: 0.05,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSettings(m.into()));
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.min_step > 0.0) || !(self.max_step > self.min_step) {
            return bad("need 0 < min_step < max_step");
        }
        if let Some(g) = self.guard_radius {
            if !(g > 0.0) {
                return bad("guard radius must be positive");
            }
        }
        if !(self.dense_step > 0.0) {
            return bad("dense step must be positive");
        }
        Ok(())
    }

    /// Checks the guard radius against a coercivity radius.
    pub fn validate_with_radius(&self, rho: f64) -> Result<()> {
        self.validate()?;
        match self.guard_radius {
            Some(g) if g <= rho => Err(Error::InvalidSettings(format!(
                "guard radius {g} must exceed the coercivity radius {rho}"
            ))),
            _ => Ok(()),
        }
    }

    /// Copy with the guard set to `4ρ` unless already set.
    pub fn with_default_guard(&self, rho: f64) -> Self {
        let mut s = self.clone();
        if s.guard_radius.is_none() {
            s.guard_radius = Some(4.0 * rho);
        }
        s
    }

    pub fn halved(&self) -> Self {
        let mut s = self.clone();
        s.rtol *= 0.5;
        s.atol *= 0.5;
        s
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 0.2;
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn combine(k: &[f64], w: &[f64]) -> f64 {
    k.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// Integrates `x' = field(t, x)` from `(s, x0)` to `t_end` (either side of `s`).
pub fn integrate(
    field: &ScalarField,
    s: f64,
    x0: f64,
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    integrate_fn(|t, x| field.value_and_slope(t, x), s, x0, t_end, settings)
}

/// As [`integrate`] for any `(t, x) ↦ (h, h_x)`.
pub fn integrate_fn<F>(
    rhs: F,
    s: f64,
    x0: f64,
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<Trajectory>
where
    F: Fn(f64, f64) -> (f64, f64),
{
    settings.validate()?;
    if !(t_end != s) || !t_end.is_finite() || !s.is_finite() || !x0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "integration needs finite, distinct endpoints (s = {s}, t_end = {t_end}) and finite x0"
        )));
    }
    let direction = if t_end > s {
        Direction::Forward
    } else {
        Direction::Backward
    };
    let dir = direction.sign();
    let span = (t_end - s).abs();

    let mut t = s;
    let mut x = x0;
    let mut int = 0.0;
    let (mut fx_val, mut fx_slope) = rhs(t, x);

    let mut times = vec![t];
    let mut xs = vec![x];
    let mut ints = vec![int];
    let mut segments: Vec<Segment> = Vec::new();
    let mut status = Status::ReachedHorizon;

    let mut h = dir * initial_step(fx_val, x, settings).min(span);
    let mut steps = 0usize;
    let mut reject_streak = false;

    let mut kx = [0.0; 7];
    let mut ki = [0.0; 7];
    loop {
        if (t_end - t) * dir <= 0.0 {
            break;
        }
        if steps >= settings.max_steps {
            status = Status::StepCollapse { t };
            break;
        }
        steps += 1;
        let remaining = t_end - t;
        let mut last = false;
        if (h.abs()) >= remaining.abs() {
            h = remaining;
            last = true;
        }

        kx[0] = fx_val;
        ki[0] = fx_slope;
        for stage in 1..7 {
            let row: &[f64] = match stage {
                1 => std::slice::from_ref(&A21),
                2 => &A3,
                3 => &A4,
                4 => &A5,
                5 => &A6,
                _ => &B,
            };
            let xs_stage = x + h * combine(&kx[..stage], row);
            let (a, b) = rhs(t + C[stage] * h, xs_stage);
            kx[stage] = a;
            ki[stage] = b;
        }
        let x_new = x + h * combine(&kx[..6], &B);
        let i_new = int + h * combine(&ki[..6], &B);
        let ex = h * combine(&kx, &E);
        let ei = h * combine(&ki, &E);
        let sx = settings.atol + settings.rtol * x.abs().max(x_new.abs());
        let si = settings.atol + settings.rtol * int.abs().max(i_new.abs());
        let err = (0.5 * ((ex / sx).powi(2) + (ei / si).powi(2))).sqrt();

        if !x_new.is_finite() || !err.is_finite() {
            h *= 0.2;
            if h.abs() < settings.min_step {
                status = Status::BlowUp {
                    t,
                    sign: x.signum(),
                };
                break;
            }
            reject_streak = true;
            continue;
        }

        if err <= 1.0 {
            let rc1x = x_new - x;
            let rc2x = h * kx[0] - rc1x;
            let rc3x = rc1x - h * kx[6] - rc2x;
            let rc4x = h * combine(&kx, &D);
            let rc1i = i_new - int;
            let rc2i = h * ki[0] - rc1i;
            let rc3i = rc1i - h * ki[6] - rc2i;
            let rc4i = h * combine(&ki, &D);
            segments.push(Segment {
                t_old: t,
                h,
                cx: [x, rc1x, rc2x, rc3x, rc4x],
                ci: [int, rc1i, rc2i, rc3i, rc4i],
            });
            t = if last { t_end } else { t + h };
            x = x_new;
            int = i_new;
            fx_val = kx[6];
            fx_slope = ki[6];
            times.push(t);
            xs.push(x);
            ints.push(int);

            if let Some(g) = settings.guard_radius {
                if x.abs() > g && x * fx_val * dir > 0.0 {
                    status = Status::BlowUp {
                        t,
                        sign: x.signum(),
                    };
                    break;
                }
            }
            if last {
                break;
            }
            let mut fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
            if reject_streak {
                fac = fac.min(1.0);
            }
            reject_streak = false;
            h = dir * (h.abs() * fac).min(settings.max_step);
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
            reject_streak = true;
            if h.abs() < settings.min_step {
                status = Status::StepCollapse { t };
                break;
            }
        }
    }

    if direction == Direction::Backward {
        times.reverse();
        xs.reverse();
        ints.reverse();
        segments.reverse();
    }
    Ok(Trajectory {
        anchor: s,
        x0,
        direction,
        times,
        xs,
        integrals: ints,
        segments,
        status,
    })
}

fn initial_step(f0: f64, x0: f64, settings: &IntegratorSettings) -> f64 {
    let scale = settings.atol + settings.rtol * x0.abs();
    let d0 = x0.abs() / scale;
    let d1 = f0.abs() / scale;
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.clamp(settings.min_step * 10.0, settings.max_step)
}

/// Starting rule for pullback limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PullbackRule {
    /// Start at `+ρ`: converges to the upper bounded solution.
    Upper,
    /// Start at `−ρ`: converges to the lower bounded solution.
    Lower,
}

/// Horizon schedule for pullback limits.
pub const PULLBACK_HORIZONS: [f64; 7] = [25.0, 50.0, 100.0, 200.0, 400.0, 800.0, 1600.0];
pub const PULLBACK_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct PullbackOutcome {
    pub value: f64,
    pub converged: bool,
    pub last_difference: f64,
    pub horizon: f64,
}

/// `lim_{H→∞} x(anchor, anchor − H, ±ρ)` along the horizon schedule.
pub fn pullback_limit(
    field: &ScalarField,
    anchor: f64,
    rule: PullbackRule,
    rho: f64,
    horizons: &[f64],
    tol: f64,
    settings: &IntegratorSettings,
) -> Result<PullbackOutcome> {
    if horizons.len() < 2 || horizons.windows(2).any(|w| w[1] <= w[0]) || horizons[0] <= 0.0 {
        return Err(Error::InvalidArgument(
            "pullback horizons must be positive, increasing, and at least two".into(),
        ));
    }
    let x0 = match rule {
        PullbackRule::Upper => rho,
        PullbackRule::Lower => -rho,
    };
    let mut prev: Option<f64> = None;
    let mut diff = f64::INFINITY;
    for &h in horizons {
        let tr = integrate(field, anchor - h, x0, anchor, settings)?;
        if let Status::BlowUp { t, sign } = tr.status() {
            return Err(Error::BlowUp { t, sign });
        }
        let v = tr.terminal_value();
        if let Some(p) = prev {
            diff = (v - p).abs();
            if diff < tol {
                return Ok(PullbackOutcome {
                    value: v,
                    converged: true,
                    last_difference: diff,
                    horizon: h,
                });
            }
        }
        prev = Some(v);
    }
    Ok(PullbackOutcome {
        value: prev.unwrap(),
        converged: false,
        last_difference: diff,
        horizon: horizons[horizons.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> ScalarField {
        ScalarField::polynomial([0.0, 1.0, 0.0, -1.0])
    }

    #[test]
    fn linear_decay() {
        let f = ScalarField::polynomial([0.0, -1.0, 0.0, 0.0]);
        let tr = integrate(&f, 0.0, 1.0, 1.0, &IntegratorSettings::default()).unwrap();
        assert_eq!(tr.status(), Status::ReachedHorizon);
        assert!((tr.terminal_value() - (-1.0f64).exp()).abs() < 1e-8);
        assert!((tr.integrals().last().unwrap() + 1.0).abs() < 1e-8);
        for t in [0.1, 0.45, 0.93] {
            assert!((tr.at(t).unwrap() - (-t).exp()).abs() < 1e-9);
            assert!((tr.integral_at(t).unwrap() + t).abs() < 1e-9);
        }
    }

    #[test]
    fn cubic_forward_and_backward() {
        let s = IntegratorSettings::default();
        let fwd = integrate(&cubic(), 0.0, 0.5, 40.0, &s).unwrap();
        assert!((fwd.terminal_value() - 1.0).abs() < 1e-6);
        let bwd = integrate(&cubic(), 0.0, 0.5, -40.0, &s).unwrap();
        assert_eq!(bwd.direction(), Direction::Backward);
        assert_eq!(bwd.start(), -40.0);
        let v = bwd.terminal_value();
        assert!(v > 0.0 && v <= 1e-6, "{v}");
        // x(t)² = 1/(1 + (1/x0² − 1) e^{−2t}) for the cubic.
        let exact = |t: f64| (1.0 / (1.0 + 3.0 * (-2.0 * t).exp())).sqrt();
        for t in [-10.0, -2.5, 0.0, 3.0] {
            let tr = if t < 0.0 { &bwd } else { &fwd };
            assert!((tr.at(t).unwrap() - exact(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn backward_blow_up_is_flagged() {
        let s = IntegratorSettings {
            guard_radius: Some(4.0 * 2f64.sqrt()),
            ..Default::default()
        };
        let tr = integrate(&cubic(), 0.0, 1.5, -10.0, &s).unwrap();
        match tr.status() {
            Status::BlowUp { t, sign } => {
                assert!(t > -1.0 && t < 0.0);
                assert_eq!(sign, 1.0);
            }
            st => panic!("expected blow-up, got {st:?}"),
        }
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let s = IntegratorSettings {
            rtol: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            integrate(&cubic(), 0.0, 0.5, 1.0, &s),
            Err(Error::InvalidSettings(_))
        ));
        assert!(integrate(&cubic(), 0.0, 0.5, 0.0, &IntegratorSettings::default()).is_err());
    }

    #[test]
    fn pullback_limits_of_cubic() {
        let s = IntegratorSettings::default();
        let rho = 2f64.sqrt();
        let up = pullback_limit(
            &cubic(),
            0.0,
            PullbackRule::Upper,
            rho,
            &PULLBACK_HORIZONS,
            1e-7,
            &s,
        )
        .unwrap();
        assert!(up.converged && (up.value - 1.0).abs() < 1e-7);
        let lo = pullback_limit(
            &cubic(),
            0.0,
            PullbackRule::Lower,
            rho,
            &PULLBACK_HORIZONS,
            1e-7,
            &s,
        )
        .unwrap();
        assert!(lo.converged && (lo.value + 1.0).abs() < 1e-7);
    }
}
