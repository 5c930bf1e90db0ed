//! Transition profiles `Γ(t)` with finite asymptotic limits, and the
//! rate/phase/scale/split/clamp transforms used by the tipping analyses.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which side of the limits the split transform extends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitSide {
    /// `Δ1 = min(γ_M, Γ)`: the profile overshoots above `max(γ−, γ+)`.
    Upper,
    /// `Δ1 = max(γ_m, Γ)`: the profile undershoots below `min(γ−, γ+)`.
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TransitionProfile {
    Constant {
        value: f64,
    },
    /// `from + (to − from)·(1/2 + arctan(t)/π)`.
    ArctanSigmoid {
        from: f64,
        to: f64,
    },
    /// `base + (peak − base)·exp(−t²/width)`.
    GaussianImpulse {
        base: f64,
        peak: f64,
        width: f64,
    },
    /// Piecewise-linear through the samples, constant beyond the first and
    /// last sample (which are the limits).
    Sampled {
        times: Vec<f64>,
        values: Vec<f64>,
    },
    /// `Γ(c·t)`.
    Rate {
        inner: Box<TransitionProfile>,
        c: f64,
    },
    /// `Γ(t + c)`.
    Phase {
        inner: Box<TransitionProfile>,
        c: f64,
    },
    /// `d·Γ(t)`.
    Scale {
        inner: Box<TransitionProfile>,
        d: f64,
    },
    /// `Γ_d = Δ1 + d·Δ2` with `Δ2 = Γ − Δ1`.
    Split {
        inner: Box<TransitionProfile>,
        d: f64,
        side: SplitSide,
    },
    /// `Γ_r^−`: equal to `Γ` on `(−∞, −r]`, constant `Γ(−r)` afterwards.
    ClampPast {
        inner: Box<TransitionProfile>,
        r: f64,
    },
    /// `Γ_r^+`: constant `Γ(r)` on `(−∞, r)`, equal to `Γ` afterwards.
    ClampFuture {
        inner: Box<TransitionProfile>,
        r: f64,
    },
    /// `Γ'(t)` of a profile with a closed-form derivative.
    Derivative {
        inner: Box<TransitionProfile>,
    },
}

impl TransitionProfile {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn arctan_sigmoid(from: f64, to: f64) -> Self {
        Self::ArctanSigmoid { from, to }
    }

    pub fn gaussian_impulse(base: f64, peak: f64, width: f64) -> Self {
        Self::GaussianImpulse { base, peak, width }
    }

    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> crate::Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(crate::Error::InvalidArgument(
                "sampled profile needs at least two (t, value) pairs".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(crate::Error::InvalidArgument(
                "sampled profile times must be strictly increasing".into(),
            ));
        }
        Ok(Self::Sampled { times, values })
    }

    pub fn rate(self, c: f64) -> Self {
        Self::Rate {
            inner: Box::new(self),
            c,
        }
    }

    pub fn phase(self, c: f64) -> Self {
        Self::Phase {
            inner: Box::new(self),
            c,
        }
    }

    pub fn scale(self, d: f64) -> Self {
        Self::Scale {
            inner: Box::new(self),
            d,
        }
    }

    pub fn split(self, d: f64, side: SplitSide) -> Self {
        Self::Split {
            inner: Box::new(self),
            d,
            side,
        }
    }

    pub fn clamp_past(self, r: f64) -> Self {
        Self::ClampPast {
            inner: Box::new(self),
            r,
        }
    }

    pub fn clamp_future(self, r: f64) -> Self {
        Self::ClampFuture {
            inner: Box::new(self),
            r,
        }
    }

    pub fn derivative_profile(self) -> Self {
        Self::Derivative {
            inner: Box::new(self),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::ArctanSigmoid { from, to } => from + (to - from) * (0.5 + t.atan() / PI),
            Self::GaussianImpulse { base, peak, width } => {
                base + (peak - base) * (-t * t / width).exp()
            }
            Self::Sampled { times, values } => interpolate(times, values, t),
            Self::Rate { inner, c } => inner.eval(c * t),
            Self::Phase { inner, c } => inner.eval(t + c),
            Self::Scale { inner, d } => d * inner.eval(t),
            Self::Split { inner, d, side } => {
                let (lo, hi) = inner.limits();
                let g = inner.eval(t);
                split_map(g, *d, *side, lo, hi)
            }
            Self::ClampPast { inner, r } => inner.eval(t.min(-r)),
            Self::ClampFuture { inner, r } => inner.eval(t.max(*r)),
            Self::Derivative { inner } => inner.derivative(t).unwrap_or(f64::NAN),
        }
    }

    /// Closed-form `Γ'(t)`; `None` for sampled profiles and second derivatives.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        match self {
            Self::Constant { .. } => Some(0.0),
            Self::ArctanSigmoid { from, to } => Some((to - from) / (PI * (1.0 + t * t))),
            Self::GaussianImpulse { base, peak, width } => {
                Some((peak - base) * (-2.0 * t / width) * (-t * t / width).exp())
            }
            Self::Sampled { .. } => None,
            Self::Rate { inner, c } => inner.derivative(c * t).map(|v| c * v),
            Self::Phase { inner, c } => inner.derivative(t + c),
            Self::Scale { inner, d } => inner.derivative(t).map(|v| d * v),
            Self::Split { inner, d, side } => {
                let (lo, hi) = inner.limits();
                let g = inner.eval(t);
                let active = match side {
                    SplitSide::Upper => g > lo.max(hi),
                    SplitSide::Lower => g < lo.min(hi),
                };
                inner.derivative(t).map(|v| if active { d * v } else { v })
            }
            Self::ClampPast { inner, r } => {
                if t <= -r {
                    inner.derivative(t)
                } else {
                    inner.derivative(-r).map(|_| 0.0)
                }
            }
            Self::ClampFuture { inner, r } => {
                if t >= *r {
                    inner.derivative(t)
                } else {
                    inner.derivative(*r).map(|_| 0.0)
                }
            }
            Self::Derivative { .. } => None,
        }
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative(0.0).is_some()
    }

    /// Asymptotic limits `(γ−, γ+)`.
    pub fn limits(&self) -> (f64, f64) {
        match self {
            Self::Constant { value } => (*value, *value),
            Self::ArctanSigmoid { from, to } => (*from, *to),
            Self::GaussianImpulse { base, .. } => (*base, *base),
            Self::Sampled { values, .. } => (values[0], values[values.len() - 1]),
            Self::Rate { inner, c } => {
                let (a, b) = inner.limits();
                if *c >= 0.0 {
                    (a, b)
                } else {
                    (b, a)
                }
            }
            Self::Phase { inner, .. } | Self::Split { inner, .. } => inner.limits(),
            Self::Scale { inner, d } => {
                let (a, b) = inner.limits();
                (d * a, d * b)
            }
            Self::ClampPast { inner, r } => (inner.limits().0, inner.eval(-r)),
            Self::ClampFuture { inner, r } => (inner.eval(*r), inner.limits().1),
            Self::Derivative { .. } => (0.0, 0.0),
        }
    }

    /// A time `H ≥ 0` with `|Γ(t) − γ−| < eps` for `t ≤ −H` and
    /// `|Γ(t) − γ+| < eps` for `t ≥ H`.
    pub fn horizon(&self, eps: f64) -> f64 {
        assert!(eps > 0.0, "horizon tolerance must be positive");
        match self {
            Self::Constant { .. } => 0.0,
            Self::ArctanSigmoid { from, to } => {
                let amp = (to - from).abs();
                let ratio = PI * eps / amp;
                if amp == 0.0 || ratio >= PI / 2.0 {
                    0.0
                } else {
                    1.0 / ratio.tan()
                }
            }
            Self::GaussianImpulse { base, peak, width } => {
                let amp = (peak - base).abs();
                if amp <= eps {
                    0.0
                } else {
                    (width * (amp / eps).ln()).sqrt()
                }
            }
            Self::Sampled { times, .. } => times[0].abs().max(times[times.len() - 1].abs()),
            Self::Rate { inner, c } => inner.horizon(eps) / c.abs(),
            Self::Phase { inner, c } => inner.horizon(eps) + c.abs(),
            Self::Scale { inner, d } => {
                if *d == 0.0 {
                    0.0
                } else {
                    inner.horizon(eps / d.abs())
                }
            }
            Self::Split { inner, d, .. } => inner.horizon(eps / (1.0 + d.abs())),
            Self::ClampPast { inner, r } | Self::ClampFuture { inner, r } => {
                inner.horizon(eps).max(r.abs())
            }
            Self::Derivative { inner } => numeric_horizon(self, eps, inner.horizon(eps).max(1.0)),
        }
    }

    /// An interval containing the closure of `Γ(ℝ)`; exact for the base kinds.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Self::Constant { value } => (*value, *value),
            Self::ArctanSigmoid { from, to } => (from.min(*to), from.max(*to)),
            Self::GaussianImpulse { base, peak, .. } => (base.min(*peak), base.max(*peak)),
            Self::Sampled { values, .. } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                }),
            Self::Rate { inner, .. } | Self::Phase { inner, .. } => inner.range(),
            Self::Scale { inner, d } => {
                let (a, b) = inner.range();
                let (x, y) = (d * a, d * b);
                (x.min(y), x.max(y))
            }
            Self::Split { inner, d, side } => {
                let (lo_lim, hi_lim) = inner.limits();
                let (a, b) = inner.range();
                let pivot = match side {
                    SplitSide::Upper => lo_lim.max(hi_lim),
                    SplitSide::Lower => lo_lim.min(hi_lim),
                };
                let mut vals = vec![
                    split_map(a, *d, *side, lo_lim, hi_lim),
                    split_map(b, *d, *side, lo_lim, hi_lim),
                ];
                if a < pivot && pivot < b {
                    vals.push(pivot);
                }
                vals.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                        (lo.min(v), hi.max(v))
                    })
            }
            Self::ClampPast { inner, .. } | Self::ClampFuture { inner, .. } => inner.range(),
            Self::Derivative { inner } => {
                let h = inner.horizon(1e-12).max(1.0);
                sampled_range(self, h)
            }
        }
    }

    /// Time at which `|Γ'|` is maximal on `[-h, h]` (grid search), or `None`
    /// without a closed-form derivative or when `Γ' ≡ 0`.
    pub fn steepest_time(&self, h: f64) -> Option<f64> {
        self.derivative(0.0)?;
        let n = 4000;
        let mut best = (0.0_f64, None);
        for i in 0..=n {
            let t = -h + 2.0 * h * i as f64 / n as f64;
            let v = self.derivative(t).unwrap_or(0.0).abs();
            if v > best.0 {
                best = (v, Some(t));
            }
        }
        best.1
    }
}

fn split_map(g: f64, d: f64, side: SplitSide, lo: f64, hi: f64) -> f64 {
    match side {
        SplitSide::Upper => {
            let pivot = lo.max(hi);
            let delta1 = g.min(pivot);
            delta1 + d * (g - delta1)
        }
        SplitSide::Lower => {
            let pivot = lo.min(hi);
            let delta1 = g.max(pivot);
            delta1 + d * (g - delta1)
        }
    }
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let n = times.len();
    if t <= times[0] {
        return values[0];
    }
    if t >= times[n - 1] {
        return values[n - 1];
    }
    let i = times.partition_point(|&s| s <= t) - 1;
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    values[i] + w * (values[i + 1] - values[i])
}

fn sampled_range(p: &TransitionProfile, h: f64) -> (f64, f64) {
    let (a, b) = p.limits();
    let mut lo = a.min(b);
    let mut hi = a.max(b);
    let n = 20_000;
    for i in 0..=n {
        let t = -h + 2.0 * h * i as f64 / n as f64;
        let v = p.eval(t);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn numeric_horizon(p: &TransitionProfile, eps: f64, start: f64) -> f64 {
    let (a, b) = p.limits();
    let mut h = start;
    for _ in 0..60 {
        let ok = (0..=256).all(|i| {
            let t = h * (1.0 + 63.0 * i as f64 / 256.0);
            (p.eval(t) - b).abs() < eps && (p.eval(-t) - a).abs() < eps
        });
        if ok {
            return h;
        }
        h *= 2.0;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits_and_horizons() {
        let g = TransitionProfile::gaussian_impulse(8.5, 9.0, 10.0);
        assert_eq!(g.limits(), (8.5, 8.5));
        let h = g.horizon(1e-10);
        assert!((g.eval(h) - 8.5).abs() <= 1e-10 * 1.0001);
        assert!((g.eval(-1.01 * h) - 8.5).abs() < 1e-10);

        let a = TransitionProfile::arctan_sigmoid(0.0, 1.0);
        let h = a.horizon(1e-3);
        assert!((a.eval(h * 1.001) - 1.0).abs() < 1e-3);
        assert!(a.eval(-h * 1.001).abs() < 1e-3);
        assert!((a.eval(h * 0.9) - 1.0).abs() > 1e-3);
    }

    #[test]
    fn rate_and_phase_preserve_limits() {
        let a = TransitionProfile::arctan_sigmoid(-1.0, 2.0);
        assert_eq!(a.clone().rate(3.0).limits(), (-1.0, 2.0));
        assert_eq!(a.clone().phase(-7.0).limits(), (-1.0, 2.0));
        let r = a.clone().rate(0.2);
        assert!((r.horizon(1e-4) - a.horizon(1e-4) / 0.2).abs() < 1e-9);
    }

    #[test]
    fn clamps_are_constant_on_their_halflines() {
        let g = TransitionProfile::gaussian_impulse(0.0, 1.0, 10.0);
        let past = g.clone().clamp_past(3.0);
        let fut = g.clone().clamp_future(3.0);
        for t in [-3.0, -1.0, 0.0, 10.0, 100.0] {
            assert_eq!(past.eval(t), g.eval(-3.0));
        }
        for t in [-100.0, -3.0, 0.0, 2.999] {
            assert_eq!(fut.eval(t), g.eval(3.0));
        }
        assert_eq!(fut.eval(5.0), g.eval(5.0));
        assert_eq!(past.eval(-5.0), g.eval(-5.0));
    }

    #[test]
    fn split_has_nonnegative_second_part_for_overshoot() {
        let g = TransitionProfile::gaussian_impulse(1.0, 3.0, 4.0);
        let base = g.clone().split(0.0, SplitSide::Upper);
        let one = g.clone().split(1.0, SplitSide::Upper);
        for i in -40..=40 {
            let t = i as f64 * 0.25;
            assert!((one.eval(t) - g.eval(t)).abs() < 1e-15);
            // Δ1 = min(1, Γ) = 1 because Γ ≥ 1 everywhere.
            assert_eq!(base.eval(t), 1.0);
            let delta2 = g.eval(t) - base.eval(t);
            assert!(delta2 >= 0.0);
        }
        let two = g.split(2.0, SplitSide::Upper);
        assert_eq!(two.range(), (1.0, 5.0));
    }

    #[test]
    fn derivative_of_arctan() {
        let a = TransitionProfile::arctan_sigmoid(0.5 - 0.5, 1.0);
        for t in [-3.0, 0.0, 0.7, 12.0] {
            let expect = 1.0 / (PI * (1.0 + t * t));
            assert!((a.derivative(t).unwrap() - expect).abs() < 1e-15);
        }
        let dp = a.derivative_profile();
        assert_eq!(dp.limits(), (0.0, 0.0));
        let (lo, hi) = dp.range();
        assert!(lo >= 0.0 && (hi - 1.0 / PI).abs() < 1e-6);
        assert!(dp.derivative(0.0).is_none());
    }

    #[test]
    fn sampled_profile_interpolates_and_rejects_bad_input() {
        let p = TransitionProfile::sampled(vec![-1.0, 0.0, 1.0], vec![0.0, 2.0, 1.0]).unwrap();
        assert_eq!(p.eval(-0.5), 1.0);
        assert_eq!(p.eval(5.0), 1.0);
        assert_eq!(p.limits(), (0.0, 1.0));
        assert!(!p.has_derivative());
        assert!(TransitionProfile::sampled(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }
}
