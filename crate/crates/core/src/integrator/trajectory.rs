//! Dense numerical solutions with the accumulated `∫ h_x` column.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Self::Forward => 1.0,
            Self::Backward => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Status {
    ReachedHorizon,
    /// `|x|` exceeded the guard radius while moving outward.
    BlowUp {
        t: f64,
        sign: f64,
    },
    StepCollapse {
        t: f64,
    },
}

/// Continuous extension of one step, in the Dormand–Prince form
/// `y(θ) = c0 + θ(c1 + (1−θ)(c2 + θ(c3 + (1−θ)c4)))`, `θ = (t − t_old)/h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Segment {
    pub t_old: f64,
    pub h: f64,
    pub cx: [f64; 5],
    pub ci: [f64; 5],
}

impl Segment {
    fn theta(&self, t: f64) -> f64 {
        (t - self.t_old) / self.h
    }

    fn poly(c: &[f64; 5], th: f64) -> f64 {
        let th1 = 1.0 - th;
        c[0] + th * (c[1] + th1 * (c[2] + th * (c[3] + th1 * c[4])))
    }

    /// Cubic Hermite data in the same form (`c4 = 0`).
    pub fn hermite(h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> [f64; 5] {
        let c1 = y1 - y0;
        let c2 = h * d0 - c1;
        let c3 = c1 - h * d1 - c2;
        [y0, c1, c2, c3, 0.0]
    }
}

/// A solution `t ↦ x(t, s, x0)` sampled at the accepted steps, in
/// ascending time order, with the integral `I(t) = ∫ₛᵗ h_x(τ, x(τ)) dτ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub(crate) anchor: f64,
    pub(crate) x0: f64,
    pub(crate) direction: Direction,
    pub(crate) times: Vec<f64>,
    pub(crate) xs: Vec<f64>,
    pub(crate) integrals: Vec<f64>,
    /// `segments[i]` covers `[times[i], times[i + 1]]`.
    pub(crate) segments: Vec<Segment>,
    pub(crate) status: Status,
}

impl Trajectory {
    /// Builds a cubic-Hermite trajectory from samples, their slopes and the
    /// `∫ h_x` column with its slopes. Times must be strictly increasing.
    pub fn from_samples(
        times: Vec<f64>,
        xs: Vec<f64>,
        slopes: &[f64],
        integrals: Vec<f64>,
        integral_slopes: &[f64],
    ) -> Result<Self> {
        let n = times.len();
        if n < 2
            || xs.len() != n
            || slopes.len() != n
            || integrals.len() != n
            || integral_slopes.len() != n
        {
            return Err(Error::InvalidArgument(
                "trajectory samples need at least two points and matching lengths".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "trajectory sample times must be strictly increasing".into(),
            ));
        }
        let segments = (0..n - 1)
            .map(|i| {
                let h = times[i + 1] - times[i];
                Segment {
                    t_old: times[i],
                    h,
                    cx: Segment::hermite(h, xs[i], xs[i + 1], slopes[i], slopes[i + 1]),
                    ci: Segment::hermite(
                        h,
                        integrals[i],
                        integrals[i + 1],
                        integral_slopes[i],
                        integral_slopes[i + 1],
                    ),
                }
            })
            .collect();
        Ok(Self {
            anchor: times[0],
            x0: xs[0],
            direction: Direction::Forward,
            times,
            xs,
            integrals,
            segments,
            status: Status::ReachedHorizon,
        })
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn initial_value(&self) -> f64 {
        self.x0
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn blew_up(&self) -> bool {
        matches!(self.status, Status::BlowUp { .. })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.xs
    }

    pub fn integrals(&self) -> &[f64] {
        &self.integrals
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// First sample time.
    pub fn start(&self) -> f64 {
        self.times[0]
    }

    /// Last sample time.
    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// The time reached last in integration order.
    pub fn terminal_time(&self) -> f64 {
        match self.direction {
            Direction::Forward => self.end(),
            Direction::Backward => self.start(),
        }
    }

    pub fn terminal_value(&self) -> f64 {
        match self.direction {
            Direction::Forward => self.xs[self.xs.len() - 1],
            Direction::Backward => self.xs[0],
        }
    }

    pub fn covers(&self, t: f64) -> bool {
        t >= self.start() && t <= self.end()
    }

    fn locate(&self, t: f64) -> Result<Option<usize>> {
        if !self.covers(t) {
            return Err(Error::OutOfSpan {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        if self.times.len() == 1 {
            return Ok(None);
        }
        let i = self.times.partition_point(|&s| s <= t);
        Ok(Some(i.saturating_sub(1).min(self.segments.len() - 1)))
    }

    /// Dense-output value `x(t)`.
    pub fn at(&self, t: f64) -> Result<f64> {
        Ok(match self.locate(t)? {
            None => self.xs[0],
            Some(i) => {
                let s = &self.segments[i];
                Segment::poly(&s.cx, s.theta(t))
            }
        })
    }

    /// `∫ₛᵗ h_x(τ, x(τ)) dτ` with `s` the anchor.
    pub fn integral_at(&self, t: f64) -> Result<f64> {
        Ok(match self.locate(t)? {
            None => self.integrals[0],
            Some(i) => {
                let s = &self.segments[i];
                Segment::poly(&s.ci, s.theta(t))
            }
        })
    }

    /// `(t, x, ∫h_x)` on the grid `start, start + step, ...` up to `end`
    /// (always including both endpoints).
    pub fn resample(&self, step: f64) -> Vec<(f64, f64, f64)> {
        assert!(step > 0.0, "resample step must be positive");
        let (a, b) = (self.start(), self.end());
        let n = ((b - a) / step).floor() as usize;
        let mut out = Vec::with_capacity(n + 2);
        for i in 0..=n {
            let t = a + i as f64 * step;
            if t > b {
                break;
            }
            out.push((t, self.at(t).unwrap(), self.integral_at(t).unwrap()));
        }
        if out.last().is_none_or(|&(t, _, _)| t < b) {
            out.push((
                b,
                self.xs[self.xs.len() - 1],
                self.integrals[self.integrals.len() - 1],
            ));
        }
        out
    }

    /// Sup of `|self − other|` on the union of sample times inside both spans.
    pub fn sup_distance(&self, other: &Trajectory, from: f64, to: f64) -> Result<f64> {
        let a = from.max(self.start()).max(other.start());
        let b = to.min(self.end()).min(other.end());
        if a > b {
            return Err(Error::InsufficientSpan {
                needed: to - from,
                available: 0.0,
            });
        }
        let mut worst: f64 = 0.0;
        for t in self
            .times
            .iter()
            .chain(other.times.iter())
            .copied()
            .filter(|&t| t >= a && t <= b)
            .chain([a, b])
        {
            worst = worst.max((self.at(t)? - other.at(t)?).abs());
        }
        Ok(worst)
    }

    /// Min and max of `x` over the samples in `[from, to]` (dense values at the ends).
    pub fn value_range(&self, from: f64, to: f64) -> Result<(f64, f64)> {
        let a = from.max(self.start());
        let b = to.min(self.end());
        if a > b {
            return Err(Error::OutOfSpan {
                t: from,
                start: self.start(),
                end: self.end(),
            });
        }
        let mut lo = self.at(a)?.min(self.at(b)?);
        let mut hi = self.at(a)?.max(self.at(b)?);
        for (t, &x) in self.times.iter().zip(&self.xs) {
            if *t >= a && *t <= b {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        Ok((lo, hi))
    }

    /// Appends `later`, which must start at this trajectory's end. The
    /// integral column of `later` is shifted to stay anchored at `self.anchor`.
    pub(crate) fn append(&mut self, later: Trajectory) {
        debug_assert!((later.start() - self.end()).abs() <= 1e-12 * (1.0 + self.end().abs()));
        let offset = self.integrals[self.integrals.len() - 1] - later.integrals[0];
        self.times.extend(later.times.iter().skip(1));
        self.xs.extend(later.xs.iter().skip(1));
        self.integrals
            .extend(later.integrals.iter().skip(1).map(|v| v + offset));
        self.segments
            .extend(later.segments.into_iter().map(|mut s| {
                s.ci[0] += offset;
                s
            }));
        self.status = later.status;
    }

    /// Writes `t,x,int_fx` rows on the resampled grid (or at the stored
    /// samples when `step` is `None`).
    pub fn write_csv<W: Write>(&self, mut w: W, step: Option<f64>) -> std::io::Result<()> {
        writeln!(w, "t,x,int_fx")?;
        let rows: Vec<(f64, f64, f64)> = match step {
            Some(s) => self.resample(s),
            None => (0..self.len())
                .map(|i| (self.times[i], self.xs[i], self.integrals[i]))
                .collect(),
        };
        for (t, x, i) in rows {
            writeln!(w, "{},{},{}", csv_number(t), csv_number(x), csv_number(i))?;
        }
        Ok(())
    }
}

/// 17 significant digits in scientific notation, with `−0` printed as `0`.
pub fn csv_number(v: f64) -> String {
    format!("{:.16e}", v + 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exponential(rate: f64) -> Trajectory {
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
        let xs: Vec<f64> = times.iter().map(|t| (rate * t).exp()).collect();
        let dx: Vec<f64> = xs.iter().map(|x| rate * x).collect();
        let ints: Vec<f64> = times.iter().map(|t| rate * t).collect();
        let di = vec![rate; times.len()];
        Trajectory::from_samples(times, xs, &dx, ints, &di).unwrap()
    }

    #[test]
    fn hermite_interpolation_is_accurate() {
        let tr = exponential(-1.0);
        for t in [0.01, 0.333, 2.2, 4.99] {
            assert!((tr.at(t).unwrap() - (-t).exp()).abs() < 1e-7);
            assert!((tr.integral_at(t).unwrap() + t).abs() < 1e-14);
        }
        assert!(tr.at(5.1).is_err());
    }

    #[test]
    fn resample_hits_both_ends() {
        let tr = exponential(0.5);
        let rows = tr.resample(0.3);
        assert_eq!(rows[0].0, 0.0);
        assert_eq!(rows.last().unwrap().0, 5.0);
    }

    #[test]
    fn append_keeps_integral_anchor() {
        let mut a = exponential(-1.0);
        let times: Vec<f64> = (0..=10).map(|i| 5.0 + i as f64 * 0.1).collect();
        let xs: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        let dx: Vec<f64> = xs.iter().map(|x| -x).collect();
        let ints: Vec<f64> = times.iter().map(|t| -(t - 5.0)).collect();
        let b = Trajectory::from_samples(times, xs, &dx, ints, &[-1.0; 11]).unwrap();
        a.append(b);
        assert_eq!(a.end(), 6.0);
        assert!((a.integral_at(5.5).unwrap() + 5.5).abs() < 1e-13);
    }

    #[test]
    fn csv_has_header_and_fixed_format() {
        let tr = exponential(-1.0);
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, Some(1.0)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x,int_fx"));
        assert_eq!(
            lines.next(),
            Some("0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0")
        );
    }
}
