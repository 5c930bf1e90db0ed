//! Population models with Allee effect: multiplicative and additive
//! (Holling II) forms, Holling III predation and migration families.
//!
//! Ergodic integrals over the hull are replaced by time averages along
//! single trajectories, which is justified for the quasiperiodic
//! (uniquely ergodic) coefficients used here.

use crate::field::{
    family_radius, CoefficientFn, Monotonicity, ParametricFamily, ScalarField, TransitionProfile,
};
use crate::hyperbolic::{
    dichotomy_exponent_on, extremal_solution, frozen_triple, DichotomyEstimate, Hyperbolicity,
    Side, SolverSettings, TripleOutcome, COERCIVITY_SEARCH_BOUND,
};
use crate::integrator::{integrate, pullback_limit, Status, Trajectory};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Population level below which a tail counts as extinct.
pub const EXTINCTION_THRESHOLD: f64 = 1e-2;
/// Window lengths for the indicator averages.
pub const INDICATOR_WINDOWS: [f64; 3] = [100.0, 200.0, 400.0];
/// Dichotomy margin for the zero solution, whose exponent can be tiny.
pub const ZERO_MARGIN: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// `r x (1 − x/K)(x − S)/K`.
    Multiplicative,
    /// `r x (1 − x/K) − a x/(x + b)`.
    AdditiveHolling2,
    /// Multiplicative plus `−γ x²/(β + x²)`.
    Holling3Family,
    /// Multiplicative plus `γ φ(t)`.
    MigrationFamily,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCoefficients {
    pub r: CoefficientFn,
    pub k: CoefficientFn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<CoefficientFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<CoefficientFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<CoefficientFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<CoefficientFn>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationModel {
    pub kind: ModelKind,
    pub coefficients: ModelCoefficients,
    pub family: ParametricFamily,
    pub provenance: Option<String>,
}

fn check_positive(name: &str, c: &CoefficientFn, times: &[f64]) -> Result<()> {
    if let Some(t) = times.iter().find(|&&t| !(c.eval(t) > 0.0)) {
        return Err(Error::InvalidModel(format!(
            "{name}({t}) = {} is not positive",
            c.eval(*t)
        )));
    }
    Ok(())
}

fn require<'a>(
    c: &'a Option<CoefficientFn>,
    name: &str,
    kind: ModelKind,
) -> Result<&'a CoefficientFn> {
    c.as_ref()
        .ok_or_else(|| Error::InvalidModel(format!("{kind:?} model needs coefficient {name}")))
}

/// `r x (1 − x/K)(x − S)/K = (r/K²)(−x³ + (K + S) x² − K S x)`.
pub fn multiplicative_field(
    r: &CoefficientFn,
    k: &CoefficientFn,
    s: &CoefficientFn,
) -> ScalarField {
    let q = CoefficientFn::quotient(r.clone(), k.clone().times(k.clone()));
    let c3 = q.clone().scaled(-1.0);
    let c2 = q.times(CoefficientFn::sum(vec![k.clone(), s.clone()]));
    let c1 = CoefficientFn::quotient(r.clone().times(s.clone()), k.clone()).scaled(-1.0);
    ScalarField::power(c3, 3)
        .plus(&ScalarField::power(c2, 2))
        .plus(&ScalarField::power(c1, 1))
}

pub fn build_model(kind: ModelKind, coefficients: ModelCoefficients) -> Result<PopulationModel> {
    let times: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.05).collect();
    let c = &coefficients;
    check_positive("r", &c.r, &times)?;
    check_positive("K", &c.k, &times)?;
    let family = match kind {
        ModelKind::AdditiveHolling2 => {
            let a = require(&c.a, "a", kind)?;
            let b = require(&c.b, "b", kind)?;
            check_positive("a", a, &times)?;
            check_positive("b", b, &times)?;
            let base = ScalarField::power(c.r.clone(), 1)
                .plus(&ScalarField::power(
                    CoefficientFn::quotient(c.r.clone(), c.k.clone()).scaled(-1.0),
                    2,
                ))
                .plus(&ScalarField::holling2(a.clone().scaled(-1.0), b.clone()));
            ParametricFamily::new(base, ScalarField::default(), Monotonicity::Unknown)
        }
        _ => {
            let s = require(&c.s, "S", kind)?;
            if let Some(t) = times.iter().find(|&&t| s.eval(t) + c.k.eval(t) < 0.0) {
                return Err(Error::InvalidModel(format!("S + K < 0 at t = {t}")));
            }
            let base = multiplicative_field(&c.r, &c.k, s);
            match kind {
                ModelKind::Multiplicative => {
                    ParametricFamily::new(base, ScalarField::default(), Monotonicity::Unknown)
                }
                ModelKind::Holling3Family => {
                    let beta = c.beta.ok_or_else(|| {
                        Error::InvalidModel("Holling III family needs beta".into())
                    })?;
                    if !(beta > 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "beta = {beta} must be positive"
                        )));
                    }
                    ParametricFamily::new(
                        base,
                        ScalarField::holling3(CoefficientFn::constant(-1.0), beta),
                        Monotonicity::Nonincreasing,
                    )
                }
                ModelKind::MigrationFamily => {
                    let phi = require(&c.phi, "phi", kind)?;
                    ParametricFamily::new(
                        base,
                        ScalarField::power(phi.clone(), 0),
                        Monotonicity::Nondecreasing,
                    )
                }
                ModelKind::AdditiveHolling2 => unreachable!(),
            }
        }
    };
    Ok(PopulationModel {
        kind,
        coefficients,
        family,
        provenance: None,
    })
}

impl PopulationModel {
    pub fn with_provenance(mut self, tag: impl Into<String>) -> Self {
        self.provenance = Some(tag.into());
        self
    }

    /// `f_x(t, 0, γ)`, which does not depend on `γ` for these forms.
    pub fn zero_slope(&self, t: f64) -> f64 {
        self.family.base.eval(t, 0.0, 1)
    }
}

const SQRT5_HALF: f64 = 1.118_033_988_749_895;

fn k_standard() -> CoefficientFn {
    CoefficientFn::sin2(60.0, 1.0).offset(30.0)
}

/// The migration family of the invasion/extinction scenarios.
pub fn migration_scenario() -> PopulationModel {
    build_model(
        ModelKind::MigrationFamily,
        ModelCoefficients {
            r: CoefficientFn::constant(1.0),
            k: k_standard(),
            s: Some(CoefficientFn::cos2(40.0, SQRT5_HALF).offset(40.0)),
            a: None,
            b: None,
            beta: None,
            phi: Some(CoefficientFn::sin2(0.4, SQRT5_HALF).offset(0.8)),
        },
    )
    .expect("valid coefficients")
    .with_provenance("migration")
}

/// Holling III predation with strong Allee effect in the absence of predators.
pub fn holling3_strong_scenario() -> PopulationModel {
    build_model(
        ModelKind::Holling3Family,
        ModelCoefficients {
            r: CoefficientFn::constant(1.0),
            k: k_standard(),
            s: Some(CoefficientFn::cos2(20.0, SQRT5_HALF).offset(20.0)),
            a: None,
            b: None,
            beta: Some(800.0),
            phi: None,
        },
    )
    .expect("valid coefficients")
    .with_provenance("holling3-strong")
}

/// Holling III predation with weak Allee effect in the absence of predators.
pub fn holling3_weak_scenario() -> PopulationModel {
    build_model(
        ModelKind::Holling3Family,
        ModelCoefficients {
            r: CoefficientFn::cos2(0.1, SQRT5_HALF).offset(0.01),
            k: k_standard(),
            s: Some(CoefficientFn::constant(-0.01)),
            a: None,
            b: None,
            beta: Some(5e5),
            phi: None,
        },
    )
    .expect("valid coefficients")
    .with_provenance("holling3-weak")
}

/// `Γ(t) = γ₊ + (γ* − γ₊) exp(−t²/10)`.
pub fn migration_pulse(gamma_plus: f64, gamma_star: f64) -> TransitionProfile {
    TransitionProfile::gaussian_impulse(gamma_plus, gamma_star, 10.0)
}

/// `Γ(t) = 1/2 + arctan(t)/π`.
pub fn predation_ramp() -> TransitionProfile {
    TransitionProfile::arctan_sigmoid(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IBetaBound {
    /// Right end of `I_β` with `inf r/K²` taken over the audit grid.
    pub value: f64,
    /// Same with `inf r / sup K²` from interval bounds (never larger).
    pub rigorous_lower: f64,
}

/// `64 / (5 √(5 − 2√5) (7 + 3√5))`.
pub fn i_beta_constant() -> f64 {
    let s5 = 5f64.sqrt();
    64.0 / (5.0 * (5.0 - 2.0 * s5).sqrt() * (7.0 + 3.0 * s5))
}

/// Right end of the interval `I_β` on which the Holling III family has
/// `f_xxx < 0`.
pub fn i_beta_sup(r: &CoefficientFn, k: &CoefficientFn, beta: f64) -> Result<IBetaBound> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta = {beta} must be positive"
        )));
    }
    let scale = beta.powf(1.5) * i_beta_constant();
    let grid_inf = (0..=4000)
        .map(|i| {
            let t = i as f64 * 0.05;
            let kv = k.eval(t);
            r.eval(t) / (kv * kv)
        })
        .fold(f64::INFINITY, f64::min);
    let (r_lo, _) = r.range();
    let (k_lo, k_hi) = k.range();
    let k_sup = k_lo.abs().max(k_hi.abs());
    Ok(IBetaBound {
        value: scale * grid_inf,
        rigorous_lower: scale * r_lo / (k_sup * k_sup),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlleeType {
    Strong,
    Weak,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicatorAverages {
    pub window: f64,
    pub sup: f64,
    pub inf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlleeReport {
    pub allee_type: AlleeType,
    pub gamma: f64,
    pub zero_dichotomy: DichotomyEstimate,
    /// `∫₀ᴴ f_x(t, 0) dt` by quadrature and from the integrator column.
    pub zero_integral: (f64, f64),
    pub indicators: Vec<IndicatorAverages>,
    /// Whether the indicator sign is stable across the window lengths.
    pub indicators_stable: bool,
    /// Values at `t = 0` of the nonnegative hyperbolic solutions found.
    pub critical_solutions: Vec<f64>,
    pub strength_ratios: Option<(f64, f64)>,
    pub note: String,
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Max and min of window averages of `g` over windows of length `l` on `[0, horizon]`.
fn window_extremes(values: &[f64], step: f64, l: f64) -> (f64, f64) {
    // values[i] is the cumulative integral at i * step.
    let w = (l / step).round() as usize;
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for i in 0..values.len().saturating_sub(w) {
        let avg = (values[i + w] - values[i]) / l;
        sup = sup.max(avg);
        inf = inf.min(avg);
    }
    (sup, inf)
}

fn cumulative<F: Fn(f64) -> f64>(f: F, horizon: f64, step: f64) -> Vec<f64> {
    let n = (horizon / step).round() as usize;
    let mut out = vec![0.0; n + 1];
    for i in 0..n {
        let a = i as f64 * step;
        out[i + 1] = out[i] + simpson(&f, a, a + step, 4);
    }
    out
}

pub fn allee_type(
    model: &PopulationModel,
    gamma: f64,
    horizon: f64,
    settings: &SolverSettings,
) -> Result<AlleeReport> {
    let field = model.family.freeze(gamma);
    if (0..=400).any(|i| field.eval(i as f64 * 0.5, 0.0, 0) != 0.0) {
        return Err(Error::InvalidModel(format!(
            "x = 0 does not solve the frozen equation at gamma = {gamma}"
        )));
    }
    if horizon < 4.0 * INDICATOR_WINDOWS[0] {
        return Err(Error::InsufficientSpan {
            needed: 4.0 * INDICATOR_WINDOWS[0],
            available: horizon,
        });
    }
    let zero_traj = integrate(&field, 0.0, 0.0, horizon, &settings.integrator)?;
    let slope = |t: f64| field.eval(t, 0.0, 1);
    let quad = simpson(slope, 0.0, horizon, (horizon * 40.0) as usize);
    let column = *zero_traj.integrals().last().unwrap();
    let zero_dichotomy = dichotomy_exponent_on(
        &zero_traj,
        (0.0, horizon),
        settings.dichotomy_window,
        ZERO_MARGIN,
    )?;

    let step = 0.5;
    let cum = cumulative(slope, horizon, step);
    let indicators: Vec<IndicatorAverages> = INDICATOR_WINDOWS
        .iter()
        .filter(|&&l| l * 2.0 <= horizon)
        .map(|&l| {
            let (sup, inf) = window_extremes(&cum, step, l);
            IndicatorAverages {
                window: l,
                sup,
                inf,
            }
        })
        .collect();
    let signs: Vec<(bool, bool)> = indicators
        .iter()
        .map(|i| (i.sup < 0.0, i.inf > 0.0))
        .collect();
    let indicators_stable = signs.windows(2).all(|w| w[0] == w[1]);

    let span = (0.0, horizon);
    let mut critical = Vec::new();
    let mut ratios = None;
    let (allee, note) = match zero_dichotomy.classification {
        Hyperbolicity::Attractive => match frozen_triple(&model.family, gamma, span, settings)? {
            TripleOutcome::Found(tr) => {
                let (l_lo, _) = tr.lower.value_range(span.0, span.1)?;
                let (m_lo, _) = tr.middle.value_range(span.0, span.1)?;
                if l_lo.abs() < 1e-6 && m_lo > 0.0 {
                    critical = vec![tr.lower.at(0.0)?, tr.middle.at(0.0)?, tr.upper.at(0.0)?];
                    ratios = Some(ratio_extremes(&tr.middle, &tr.upper, span)?);
                    (
                        AlleeType::Strong,
                        "three nonnegative hyperbolic solutions".to_string(),
                    )
                } else {
                    (
                        AlleeType::Indeterminate,
                        format!("zero attractive but a hyperbolic solution is negative (min {l_lo:.3e})"),
                    )
                }
            }
            TripleOutcome::NotFound(reason) => (
                AlleeType::Indeterminate,
                format!("zero attractive but no hyperbolic triple: {reason:?}"),
            ),
        },
        Hyperbolicity::Repulsive => {
            // The lower bounded solution lies below the repulsive zero, so the
            // nonnegative hyperbolic solutions are 0 and a positive attractive upper one.
            let rho = family_radius(&model.family, (gamma, gamma), 1.0, COERCIVITY_SEARCH_BOUND)?;
            let upper = extremal_solution(&field, Side::Upper, span, rho, settings)?;
            let (u_lo, _) = upper.value_range(span.0, span.1)?;
            let ud = dichotomy_exponent_on(
                &upper,
                span,
                settings.dichotomy_window,
                settings.dichotomy_margin,
            )?;
            if u_lo > settings.separation && ud.is_attractive() {
                critical = vec![0.0, upper.at(0.0)?];
                (
                    AlleeType::Weak,
                    "zero repulsive with a positive attractive upper solution".to_string(),
                )
            } else {
                (
                    AlleeType::Indeterminate,
                    "zero repulsive but the upper solution is not certified positive and attractive"
                        .to_string(),
                )
            }
        }
        Hyperbolicity::Indeterminate => (
            AlleeType::Indeterminate,
            "zero solution is not hyperbolic on the horizon".to_string(),
        ),
    };

    Ok(AlleeReport {
        allee_type: allee,
        gamma,
        zero_dichotomy,
        zero_integral: (quad, column),
        indicators,
        indicators_stable,
        critical_solutions: critical,
        strength_ratios: ratios,
        note,
    })
}

/// Min and max of window averages of `κ/β` for windows of the largest
/// indicator length that fits four times into the span.
fn ratio_extremes(kappa: &Trajectory, beta: &Trajectory, span: (f64, f64)) -> Result<(f64, f64)> {
    let len = span.1 - span.0;
    let l = INDICATOR_WINDOWS
        .iter()
        .rev()
        .copied()
        .find(|&l| 4.0 * l <= len)
        .unwrap_or(len / 4.0);
    let step = 0.25;
    let n = (len / step).floor() as usize;
    let mut cum = vec![0.0; n + 1];
    let ratio = |t: f64| -> Result<f64> { Ok(kappa.at(t)? / beta.at(t)?) };
    let mut prev = ratio(span.0)?;
    for i in 0..n {
        let a = span.0 + i as f64 * step;
        let mid = ratio(a + 0.5 * step)?;
        let next = ratio(a + step)?;
        cum[i + 1] = cum[i] + step / 6.0 * (prev + 4.0 * mid + next);
        prev = next;
    }
    let (sup, inf) = window_extremes(&cum, step, l);
    Ok((inf, sup))
}

/// Inf and sup of long-window averages of `κ/β` (middle over upper
/// solution) for a model with strong Allee effect at `γ`.
pub fn strength_ratios(
    model: &PopulationModel,
    gamma: f64,
    horizon: f64,
    settings: &SolverSettings,
) -> Result<(f64, f64)> {
    let report = allee_type(model, gamma, horizon, settings)?;
    match (report.allee_type, report.strength_ratios) {
        (AlleeType::Strong, Some(r)) => Ok(r),
        _ => Err(Error::InvalidModel(format!(
            "strength ratios need strong Allee effect: {}",
            report.note
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapsePoint {
    pub d: f64,
    /// `max u_Γ` over the tail window `[0.8 T, T]`.
    pub tail: f64,
    pub collapsed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseScan {
    pub horizon: f64,
    pub points: Vec<CollapsePoint>,
    /// Adjacent grid values with persistence below and collapse above.
    pub bracket: Option<(f64, f64)>,
}

/// Upper bounded solution of `x' = f(t, x, d Γ(t))` on `[−T, T]`.
pub fn upper_solution_scaled(
    model: &PopulationModel,
    profile: &TransitionProfile,
    d: f64,
    horizon: f64,
    settings: &SolverSettings,
) -> Result<Trajectory> {
    let scaled = profile.clone().scale(d);
    let field = model.family.compose(&scaled);
    let range = scaled.range();
    let rho = family_radius(&model.family, range, 1.0, COERCIVITY_SEARCH_BOUND)?;
    let integ = settings.integrator.with_default_guard(rho);
    let pb = pullback_limit(
        &field,
        -horizon,
        Side::Upper.into(),
        rho,
        &settings.horizons,
        settings.pullback_tol,
        &integ,
    )?;
    if !pb.converged {
        return Err(Error::PullbackNotConverged {
            last_difference: pb.last_difference,
            horizon: pb.horizon,
        });
    }
    let tr = integrate(&field, -horizon, pb.value, horizon, &integ)?;
    if let Status::BlowUp { t, sign } = tr.status() {
        return Err(Error::BlowUp { t, sign });
    }
    Ok(tr)
}

pub fn collapse_point(
    model: &PopulationModel,
    profile: &TransitionProfile,
    d: f64,
    horizon: f64,
    settings: &SolverSettings,
) -> Result<CollapsePoint> {
    let tr = upper_solution_scaled(model, profile, d, horizon, settings)?;
    let (_, tail) = tr.value_range(0.8 * horizon, horizon)?;
    Ok(CollapsePoint {
        d,
        tail,
        collapsed: tail < EXTINCTION_THRESHOLD,
    })
}

/// Tail of `u_Γ` for each `d`, and a bracket of the first persistence→collapse
/// change, refined by bisection to `tol` when given.
pub fn collapse_scan(
    model: &PopulationModel,
    profile: &TransitionProfile,
    d_grid: &[f64],
    horizon: f64,
    tol: Option<f64>,
    settings: &SolverSettings,
) -> Result<CollapseScan> {
    if !matches!(
        model.kind,
        ModelKind::Holling3Family | ModelKind::MigrationFamily
    ) {
        return Err(Error::InvalidModel(
            "collapse scans need a Holling III or migration family".into(),
        ));
    }
    let points: Vec<CollapsePoint> = d_grid
        .par_iter()
        .map(|&d| collapse_point(model, profile, d, horizon, settings))
        .collect::<Result<_>>()?;
    let mut bracket = points
        .windows(2)
        .find(|w| !w[0].collapsed && w[1].collapsed)
        .map(|w| (w[0].d, w[1].d));
    if let (Some((mut lo, mut hi)), Some(tol)) = (bracket, tol) {
        while hi - lo > 2.0 * tol {
            let mid = 0.5 * (lo + hi);
            if collapse_point(model, profile, mid, horizon, settings)?.collapsed {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        bracket = Some((lo, hi));
    }
    Ok(CollapseScan {
        horizon,
        points,
        bracket,
    })
}

/// Average of `(ln β)' = r (K − β)(β − S)/K²` along the upper solution,
/// which equals `(ln β(T) − ln β(0))/T`.
pub fn balance_average(
    model: &PopulationModel,
    upper: &Trajectory,
    from: f64,
    to: f64,
) -> Result<f64> {
    let c = &model.coefficients;
    let s =
        c.s.as_ref()
            .ok_or_else(|| Error::InvalidModel("balance needs S".into()))?;
    let g = |t: f64| -> f64 {
        let b = upper.at(t).unwrap_or(f64::NAN);
        let (r, k, sv) = (c.r.eval(t), c.k.eval(t), s.eval(t));
        r * (k - b) * (b - sv) / (k * k)
    };
    Ok(simpson(g, from, to, ((to - from) * 40.0) as usize) / (to - from))
}

/// `Γ'` for the ramp, `1/(π(1 + t²))`.
pub fn predation_ramp_rate(t: f64) -> f64 {
    1.0 / (PI * (1.0 + t * t))
}
