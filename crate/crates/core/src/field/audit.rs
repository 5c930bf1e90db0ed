//! Grid audits of the standing hypotheses: partial consistency (h2),
//! coercivity (h3), d-concavity (h4) and its strict margin (h5).

use super::family::{Monotonicity, ParametricFamily};
use super::scalar::{FieldSlice, ScalarField};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Threshold on the strict d-concavity margin.
pub const H5_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditGrids {
    pub t_start: f64,
    pub t_end: f64,
    pub t_step: f64,
    pub x_step: f64,
    /// The `x` grid spans `[−factor·ρ, factor·ρ]`.
    pub x_extent_factor: f64,
    pub gamma_points: usize,
    pub fd_step: f64,
    /// Stride through the `(t, x)` grid for the finite-difference check.
    pub fd_stride: usize,
    pub coercivity_search_bound: f64,
}

impl Default for AuditGrids {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            t_end: 200.0,
            t_step: 0.05,
            x_step: 0.05,
            x_extent_factor: 3.0,
            gamma_points: 33,
            fd_step: 1e-5,
            fd_stride: 10,
            coercivity_search_bound: 1e6,
        }
    }
}

impl AuditGrids {
    pub fn times(&self, autonomous: bool) -> Vec<f64> {
        if autonomous {
            return vec![self.t_start];
        }
        grid(self.t_start, self.t_end, self.t_step)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub x: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub pass: bool,
    /// Worst value of the checked quantity over the grid.
    pub worst: f64,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub gamma_range: (f64, f64),
    /// Coercivity radius for slope 1 over the γ range, when found.
    pub rho: Option<f64>,
    /// Worst `|fd − analytic| / (1 + |analytic|)`.
    pub h2: Check,
    pub h3: Check,
    /// Largest adjacent increase of `f_xx` in `x`.
    pub h4: Check,
    /// Smallest secant slope `−Δf_xx/Δx`.
    pub h5: Check,
    /// Smallest signed direction value (sign flipped for nonincreasing).
    pub monotonicity: Option<Check>,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.h2.pass
            && self.h3.pass
            && self.h4.pass
            && self.h5.pass
            && self.monotonicity.as_ref().is_none_or(|c| c.pass)
    }
}

fn grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round().max(0.0) as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// Minimal `ρ > 0` with `h(t, x)/x ≤ −slope` for all `|x| ≥ ρ` and `t` on
/// the default audit time grid.
pub fn coercivity_radius(field: &ScalarField, slope: f64, search_bound: f64) -> Result<f64> {
    let times = AuditGrids::default().times(field.is_autonomous());
    coercivity_radius_on(field, slope, search_bound, &times)
}

pub fn coercivity_radius_on(
    field: &ScalarField,
    slope: f64,
    search_bound: f64,
    times: &[f64],
) -> Result<f64> {
    if !(slope >= 1.0) || !(search_bound > 0.0) || times.is_empty() {
        return Err(Error::InvalidArgument(
            "coercivity search needs slope ≥ 1, a positive bound and a time grid".into(),
        ));
    }
    let slices: Vec<FieldSlice> = times.iter().map(|&t| field.slice(t)).collect();
    let holds = |x: f64| slices.iter().all(|s| s.eval(x, 0) / x <= -slope);
    let floor = search_bound * 1e-9;
    let q = 2f64.powf(-1.0 / 64.0);
    let mut rho: f64 = floor;
    for sign in [1.0, -1.0] {
        for k in 0..5 {
            if !holds(sign * search_bound * f64::from(1 << k)) {
                return Err(Error::CoercivityNotDetected { search_bound });
            }
        }
        let mut good = search_bound;
        let mut x = search_bound * q;
        while x > floor {
            if !holds(sign * x) {
                let mut bad = x;
                for _ in 0..60 {
                    let mid = 0.5 * (bad + good);
                    if holds(sign * mid) {
                        good = mid;
                    } else {
                        bad = mid;
                    }
                }
                rho = rho.max(good);
                break;
            }
            good = x;
            x *= q;
        }
    }
    Ok(rho)
}

/// Coercivity radius valid for every frozen field with `γ` in the range.
/// Sufficient to check the endpoints since `f/x` is affine in `γ`.
pub fn family_radius(
    family: &ParametricFamily,
    gamma_range: (f64, f64),
    slope: f64,
    search_bound: f64,
) -> Result<f64> {
    let lo = coercivity_radius(&family.freeze(gamma_range.0), slope, search_bound)?;
    if gamma_range.1 == gamma_range.0 {
        return Ok(lo);
    }
    let hi = coercivity_radius(&family.freeze(gamma_range.1), slope, search_bound)?;
    Ok(lo.max(hi))
}

pub fn hypothesis_audit(
    family: &ParametricFamily,
    gamma_range: (f64, f64),
    grids: &AuditGrids,
) -> AuditReport {
    let (g_lo, g_hi) = gamma_range;
    let autonomous = family.is_autonomous();
    let times = grids.times(autonomous);
    let gammas: Vec<f64> = if grids.gamma_points <= 1 || g_lo == g_hi {
        vec![g_lo]
    } else {
        let n = grids.gamma_points - 1;
        (0..=n)
            .map(|i| g_lo + (g_hi - g_lo) * i as f64 / n as f64)
            .collect()
    };

    let radius = gammas
        .iter()
        .filter(|&&g| g == g_lo || g == g_hi)
        .map(|&g| {
            coercivity_radius_on(
                &family.freeze(g),
                1.0,
                grids.coercivity_search_bound,
                &times,
            )
        })
        .try_fold(0.0_f64, |acc, r| r.map(|r| acc.max(r)));
    let (rho, h3) = match radius {
        Ok(r) => (
            Some(r),
            Check {
                pass: true,
                worst: r,
                witness: None,
            },
        ),
        Err(_) => (
            None,
            Check {
                pass: false,
                worst: f64::INFINITY,
                witness: None,
            },
        ),
    };
    let extent = grids.x_extent_factor * rho.unwrap_or(10.0 / grids.x_extent_factor);
    let xs = grid(-extent, extent, grids.x_step);

    let base_slices: Vec<FieldSlice> = times.iter().map(|&t| family.base.slice(t)).collect();
    let dir_slices: Vec<FieldSlice> = times.iter().map(|&t| family.direction.slice(t)).collect();

    // h2 on a strided sub-grid at every γ.
    let mut h2_worst = 0.0_f64;
    let mut h2_wit = None;
    let stride = grids.fd_stride.max(1);
    let h = grids.fd_step;
    for &g in &gammas {
        let field = family.freeze(g);
        for &t in times.iter().step_by(stride) {
            for &x in xs.iter().step_by(stride) {
                for order in 0..3 {
                    let fd =
                        (field.eval(t, x + h, order) - field.eval(t, x - h, order)) / (2.0 * h);
                    let an = field.eval(t, x, order + 1);
                    let err = (fd - an).abs() / (1.0 + an.abs());
                    if !(err <= h2_worst) {
                        h2_worst = err;
                        h2_wit = Some(Witness { t, x, gamma: g });
                    }
                }
            }
        }
    }
    let h2 = Check {
        pass: h2_worst <= 1e-6,
        worst: h2_worst,
        witness: h2_wit,
    };

    // h4/h5: f_xx is affine in γ, so the extreme secants are at the endpoints.
    let mut h4_worst = f64::NEG_INFINITY;
    let mut h4_wit = None;
    let mut h5_worst = f64::INFINITY;
    let mut h5_wit = None;
    let endpoints: Vec<f64> = if g_lo == g_hi {
        vec![g_lo]
    } else {
        vec![g_lo, g_hi]
    };
    for &g in &endpoints {
        for (i, &t) in times.iter().enumerate() {
            let s = base_slices[i].axpy(g, &dir_slices[i]);
            let mut prev = s.eval(xs[0], 2);
            for w in xs.windows(2) {
                let cur = s.eval(w[1], 2);
                let rise = cur - prev;
                let scaled = rise / (1.0 + prev.abs().max(cur.abs()));
                if !(scaled <= h4_worst) {
                    h4_worst = scaled;
                    h4_wit = Some(Witness {
                        t,
                        x: w[0],
                        gamma: g,
                    });
                }
                let secant = -rise / (w[1] - w[0]);
                if !(secant >= h5_worst) {
                    h5_worst = secant;
                    h5_wit = Some(Witness {
                        t,
                        x: w[0],
                        gamma: g,
                    });
                }
                prev = cur;
            }
        }
    }
    let h4 = Check {
        pass: h4_worst <= 1e-12,
        worst: h4_worst,
        witness: h4_wit,
    };
    let h5 = Check {
        pass: h5_worst > H5_THRESHOLD,
        worst: h5_worst,
        witness: h5_wit,
    };

    let monotonicity = match family.monotonicity {
        Monotonicity::Unknown => None,
        m => {
            let sign = if m == Monotonicity::Nondecreasing {
                1.0
            } else {
                -1.0
            };
            let mut worst = f64::INFINITY;
            let mut wit = None;
            for (i, &t) in times.iter().enumerate().step_by(stride) {
                for &x in xs.iter().step_by(stride) {
                    let v = sign * dir_slices[i].eval(x, 0);
                    if !(v >= worst) {
                        worst = v;
                        wit = Some(Witness {
                            t,
                            x,
                            gamma: f64::NAN,
                        });
                    }
                }
            }
            Some(Check {
                pass: worst >= 0.0,
                worst,
                witness: wit,
            })
        }
    };

    AuditReport {
        gamma_range,
        rho,
        h2,
        h3,
        h4,
        h5,
        monotonicity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::CoefficientFn;

    #[test]
    fn radius_of_pure_cubics() {
        let f = ScalarField::polynomial([0.0, 0.0, 0.0, -1.0]);
        let r = coercivity_radius(&f, 1.0, 100.0).unwrap();
        assert!((r - 1.0).abs() < 1e-9, "{r}");
        let f = ScalarField::polynomial([0.0, 1.0, 0.0, -1.0]);
        let r = coercivity_radius(&f, 1.0, 100.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-9, "{r}");
    }

    #[test]
    fn radius_fails_for_noncoercive_field() {
        let f = ScalarField::polynomial([0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            coercivity_radius(&f, 1.0, 100.0),
            Err(Error::CoercivityNotDetected { .. })
        ));
    }

    #[test]
    fn radius_holds_on_refined_grid() {
        let k = CoefficientFn::sin2(2.0, 1.0).offset(1.0);
        let f = ScalarField::power(k.scaled(-1.0), 3)
            .plus(&ScalarField::power(CoefficientFn::cos2(3.0, 0.5), 2))
            .with_forcing(CoefficientFn::constant(0.7));
        let coarse: Vec<f64> = (0..=200).map(|i| i as f64 * 0.1).collect();
        let rho = coercivity_radius_on(&f, 1.0, 1e3, &coarse).unwrap();
        for i in 0..=2000 {
            let t = i as f64 * 0.01;
            for j in 0..=100 {
                let x = rho * (1.0 + j as f64 * 0.05);
                assert!(f.eval(t, x, 0) / x <= -1.0 + 1e-9);
                assert!(f.eval(t, -x, 0) / -x <= -1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn cubic_family_passes_audit() {
        let fam = ParametricFamily::additive(ScalarField::polynomial([0.0, 1.0, 0.0, -1.0]));
        let rep = hypothesis_audit(&fam, (-1.0, 1.0), &AuditGrids::default());
        assert!(rep.all_pass(), "{rep:?}");
        assert!((rep.h5.worst - 6.0).abs() < 1e-9);
    }

    #[test]
    fn convex_second_derivative_fails_h4() {
        let fam = ParametricFamily::additive(
            ScalarField::polynomial([0.0, 0.0, 0.0, -1.0])
                .plus(&ScalarField::holling3(CoefficientFn::constant(-50.0), 1.0)),
        );
        let rep = hypothesis_audit(&fam, (0.0, 0.0), &AuditGrids::default());
        assert!(!rep.h4.pass && !rep.h5.pass);
        assert!(rep.h4.witness.is_some());
    }
}
