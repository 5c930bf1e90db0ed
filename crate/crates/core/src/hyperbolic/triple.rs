//! Extremal and middle bounded solutions, frozen-equation triples and
//! membership in `R_f`.

use super::dichotomy::{
    dichotomy_exponent_on, uniform_separation_on, DichotomyEstimate, DEFAULT_MARGIN, DEFAULT_WINDOW,
};
use crate::field::{
    coercivity_radius, hypothesis_audit, AuditGrids, ParametricFamily, ScalarField,
};
use crate::integrator::{
    integrate, pullback_limit, IntegratorSettings, PullbackRule, Status, Trajectory,
    PULLBACK_HORIZONS, PULLBACK_TOL,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Below this state distance a triple counts as collapsed.
pub const SEPARATION_THRESHOLD: f64 = 1e-4;

/// Search bound handed to the coercivity search by the solvers.
pub const COERCIVITY_SEARCH_BOUND: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Upper,
    Lower,
}

impl From<Side> for PullbackRule {
    fn from(side: Side) -> Self {
        match side {
            Side::Upper => PullbackRule::Upper,
            Side::Lower => PullbackRule::Lower,
        }
    }
}

/// Knobs shared by the triple finder and the classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub integrator: IntegratorSettings,
    pub horizons: Vec<f64>,
    pub pullback_tol: f64,
    pub separation: f64,
    pub dichotomy_window: f64,
    pub dichotomy_margin: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            integrator: IntegratorSettings::default(),
            horizons: PULLBACK_HORIZONS.to_vec(),
            pullback_tol: PULLBACK_TOL,
            separation: SEPARATION_THRESHOLD,
            dichotomy_window: DEFAULT_WINDOW,
            dichotomy_margin: DEFAULT_MARGIN,
        }
    }
}

/// `u_h` (upper) or `l_h` (lower) on `span`: pullback limit at the span
/// start, then forward integration across the span.
pub fn extremal_solution(
    field: &ScalarField,
    side: Side,
    span: (f64, f64),
    rho: f64,
    settings: &SolverSettings,
) -> Result<Trajectory> {
    let integ = settings.integrator.with_default_guard(rho);
    integ.validate_with_radius(rho)?;
    let pb = pullback_limit(
        field,
        span.0,
        side.into(),
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
    let tr = integrate(field, span.0, pb.value, span.1, &integ)?;
    if let Status::BlowUp { t, sign } = tr.status() {
        return Err(Error::BlowUp { t, sign });
    }
    Ok(tr)
}

/// A forward-integrated extremal solution that can be extended on demand.
#[derive(Clone, Debug)]
pub(crate) struct Extendable {
    pub traj: Trajectory,
}

impl Extendable {
    pub fn extend_to(
        &mut self,
        field: &ScalarField,
        t: f64,
        settings: &IntegratorSettings,
    ) -> Result<()> {
        if t <= self.traj.end() {
            return Ok(());
        }
        let later = integrate(
            field,
            self.traj.end(),
            self.traj.terminal_value(),
            t,
            settings,
        )?;
        if let Status::BlowUp { t, sign } = later.status() {
            return Err(Error::BlowUp { t, sign });
        }
        self.traj.append(later);
        Ok(())
    }
}

/// Outcome of the reverse-time pullback for a repulsive middle solution.
pub(crate) struct MiddleRun {
    pub traj: Trajectory,
    pub converged: bool,
}

/// Reverse pullback: for growing `H`, integrate backward from
/// `anchor + H`, started midway between `lower` and `upper`, down to
/// `to`, until the value at `anchor` settles.
pub(crate) fn reverse_pullback(
    field: &ScalarField,
    anchor: f64,
    to: f64,
    lower: &mut Extendable,
    upper: &mut Extendable,
    settings: &SolverSettings,
    integ: &IntegratorSettings,
) -> Result<MiddleRun> {
    let mut prev: Option<f64> = None;
    let mut last: Option<Trajectory> = None;
    for &h in &settings.horizons {
        let t0 = anchor + h;
        lower.extend_to(field, t0, integ)?;
        upper.extend_to(field, t0, integ)?;
        let x0 = 0.5 * (lower.traj.at(t0)? + upper.traj.at(t0)?);
        let tr = integrate(field, t0, x0, to.min(anchor), integ)?;
        let v = if tr.covers(anchor) {
            tr.at(anchor)?
        } else {
            f64::NAN
        };
        let done = prev.is_some_and(|p| (v - p).abs() < settings.pullback_tol);
        prev = Some(v);
        last = Some(tr);
        if done {
            return Ok(MiddleRun {
                traj: last.unwrap(),
                converged: true,
            });
        }
    }
    Ok(MiddleRun {
        traj: last.unwrap(),
        converged: false,
    })
}

#[derive(Clone, Debug)]
pub struct HyperbolicTriple {
    pub gamma: f64,
    pub span: (f64, f64),
    pub rho: f64,
    pub lower: Trajectory,
    pub middle: Trajectory,
    pub upper: Trajectory,
    pub lower_dichotomy: DichotomyEstimate,
    pub middle_dichotomy: DichotomyEstimate,
    pub upper_dichotomy: DichotomyEstimate,
    /// `(m − l, u − m, u − l)` minima over the span.
    pub separations: (f64, f64, f64),
}

/// JSON record of a triple without the trajectories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleSummary {
    pub gamma: f64,
    pub span: (f64, f64),
    pub rho: f64,
    pub values_at_start: (f64, f64, f64),
    pub exponents: (f64, f64, f64),
    pub separations: (f64, f64, f64),
    pub lower_dichotomy: DichotomyEstimate,
    pub middle_dichotomy: DichotomyEstimate,
    pub upper_dichotomy: DichotomyEstimate,
}

impl HyperbolicTriple {
    pub fn summary(&self) -> TripleSummary {
        let t = self.span.0;
        TripleSummary {
            gamma: self.gamma,
            span: self.span,
            rho: self.rho,
            values_at_start: (
                self.lower.at(t).unwrap_or(f64::NAN),
                self.middle.at(t).unwrap_or(f64::NAN),
                self.upper.at(t).unwrap_or(f64::NAN),
            ),
            exponents: (
                self.lower_dichotomy.exponent(),
                self.middle_dichotomy.exponent(),
                self.upper_dichotomy.exponent(),
            ),
            separations: self.separations,
            lower_dichotomy: self.lower_dichotomy.clone(),
            middle_dichotomy: self.middle_dichotomy.clone(),
            upper_dichotomy: self.upper_dichotomy.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum NotFound {
    /// Fewer than three uniformly separated solutions.
    Collapsed { min_separation: f64 },
    /// Separated, but some dichotomy sign could not be certified.
    IndeterminateDichotomy { which: String },
}

#[derive(Clone, Debug)]
pub enum TripleOutcome {
    Found(Box<HyperbolicTriple>),
    NotFound(NotFound),
}

impl TripleOutcome {
    pub fn found(&self) -> Option<&HyperbolicTriple> {
        match self {
            Self::Found(t) => Some(t),
            Self::NotFound(_) => None,
        }
    }
}

/// Three hyperbolic solutions of `x' = f(t, x, γ)` on `span`, if they exist.
pub fn frozen_triple(
    family: &ParametricFamily,
    gamma: f64,
    span: (f64, f64),
    settings: &SolverSettings,
) -> Result<TripleOutcome> {
    let field = family.freeze(gamma);
    let rho = coercivity_radius(&field, 1.0, COERCIVITY_SEARCH_BOUND)?;
    let first = triple_on(&field, gamma, span, rho, settings)?;
    if let TripleOutcome::NotFound(NotFound::IndeterminateDichotomy { .. }) = first {
        let doubled = (span.0, span.0 + 2.0 * (span.1 - span.0));
        return triple_on(&field, gamma, doubled, rho, settings);
    }
    Ok(first)
}

pub(crate) fn triple_on(
    field: &ScalarField,
    gamma: f64,
    span: (f64, f64),
    rho: f64,
    settings: &SolverSettings,
) -> Result<TripleOutcome> {
    let integ = settings.integrator.with_default_guard(rho);
    let mut upper = Extendable {
        traj: extremal_solution(field, Side::Upper, span, rho, settings)?,
    };
    let mut lower = Extendable {
        traj: extremal_solution(field, Side::Lower, span, rho, settings)?,
    };
    let lu = uniform_separation_on(&lower.traj, &upper.traj, span.0, span.1)?;
    if lu < settings.separation {
        return Ok(TripleOutcome::NotFound(NotFound::Collapsed {
            min_separation: lu,
        }));
    }
    let run = reverse_pullback(
        field, span.1, span.0, &mut lower, &mut upper, settings, &integ,
    )?;
    let middle = run.traj;
    if !run.converged || middle.blew_up() || !middle.covers(span.0) {
        return Ok(TripleOutcome::NotFound(NotFound::Collapsed {
            min_separation: 0.0,
        }));
    }
    let lm = signed_min_gap(&lower.traj, &middle, span)?;
    let mu = signed_min_gap(&middle, &upper.traj, span)?;
    let min_sep = lm.min(mu);
    if min_sep < settings.separation {
        return Ok(TripleOutcome::NotFound(NotFound::Collapsed {
            min_separation: min_sep,
        }));
    }
    let (w, m) = (settings.dichotomy_window, settings.dichotomy_margin);
    let ld = dichotomy_exponent_on(&lower.traj, span, w, m)?;
    let md = dichotomy_exponent_on(&middle, span, w, m)?;
    let ud = dichotomy_exponent_on(&upper.traj, span, w, m)?;
    let which = [
        ("lower", ld.is_attractive()),
        ("middle", md.is_repulsive()),
        ("upper", ud.is_attractive()),
    ]
    .iter()
    .filter(|(_, ok)| !ok)
    .map(|(n, _)| *n)
    .collect::<Vec<_>>();
    if !which.is_empty() {
        return Ok(TripleOutcome::NotFound(NotFound::IndeterminateDichotomy {
            which: which.join(","),
        }));
    }
    Ok(TripleOutcome::Found(Box::new(HyperbolicTriple {
        gamma,
        span,
        rho,
        lower: lower.traj,
        middle,
        upper: upper.traj,
        lower_dichotomy: ld,
        middle_dichotomy: md,
        upper_dichotomy: ud,
        separations: (lm, mu, lu),
    })))
}

/// `min (b − a)` over the union grid on `span` (negative if `b < a` somewhere).
pub(crate) fn signed_min_gap(a: &Trajectory, b: &Trajectory, span: (f64, f64)) -> Result<f64> {
    let lo = span.0.max(a.start()).max(b.start());
    let hi = span.1.min(a.end()).min(b.end());
    let mut best = f64::INFINITY;
    for t in a
        .times()
        .iter()
        .chain(b.times())
        .copied()
        .filter(|&t| t >= lo && t <= hi)
        .chain([lo, hi])
    {
        best = best.min(b.at(t)? - a.at(t)?);
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RfCertificate {
    pub gamma: f64,
    pub member: bool,
    pub h5_pass: bool,
    pub h5_margin: f64,
    pub triple: Option<TripleSummary>,
    pub not_found: Option<NotFound>,
}

/// Default span for membership tests.
pub const RF_SPAN: (f64, f64) = (0.0, 400.0);

/// `γ ∈ R_f`: the strict d-concavity audit passes at `γ` and the frozen
/// equation has a hyperbolic triple.
#[allow(non_snake_case)]
pub fn in_Rf(
    family: &ParametricFamily,
    gamma: f64,
    settings: &SolverSettings,
) -> Result<RfCertificate> {
    let grids = AuditGrids {
        gamma_points: 1,
        ..Default::default()
    };
    let audit = hypothesis_audit(family, (gamma, gamma), &grids);
    let outcome = frozen_triple(family, gamma, RF_SPAN, settings)?;
    let (triple, not_found) = match &outcome {
        TripleOutcome::Found(t) => (Some(t.summary()), None),
        TripleOutcome::NotFound(n) => (None, Some(n.clone())),
    };
    Ok(RfCertificate {
        gamma,
        member: audit.h5.pass && triple.is_some(),
        h5_pass: audit.h5.pass,
        h5_margin: audit.h5.worst,
        triple,
        not_found,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ParametricFamily {
        ParametricFamily::additive(ScalarField::polynomial([0.0, 1.0, 0.0, -1.0]))
    }

    #[test]
    fn autonomous_cubic_triple() {
        let out = frozen_triple(&toy(), 0.0, (0.0, 300.0), &SolverSettings::default()).unwrap();
        let tr = out.found().expect("triple exists");
        for t in [0.0, 150.0, 300.0] {
            assert!((tr.lower.at(t).unwrap() + 1.0).abs() < 1e-6);
            assert!(tr.middle.at(t).unwrap().abs() < 1e-6);
            assert!((tr.upper.at(t).unwrap() - 1.0).abs() < 1e-6);
        }
        let (a, b, c) = tr.summary().exponents;
        assert!((a + 2.0).abs() < 1e-6 && (b - 1.0).abs() < 1e-6 && (c + 2.0).abs() < 1e-6);
    }

    #[test]
    fn collapsed_beyond_the_fold() {
        let out = frozen_triple(&toy(), 1.0, (0.0, 300.0), &SolverSettings::default()).unwrap();
        assert!(matches!(
            out,
            TripleOutcome::NotFound(NotFound::Collapsed { .. })
        ));
        let cert = in_Rf(&toy(), 1.0, &SolverSettings::default()).unwrap();
        assert!(!cert.member);
        assert!(
            in_Rf(&toy(), 0.0, &SolverSettings::default())
                .unwrap()
                .member
        );
    }

    #[test]
    fn extremal_solutions_of_shifted_cubic() {
        let f = ScalarField::polynomial([0.2, 1.0, 0.0, -1.0]);
        let rho = coercivity_radius(&f, 1.0, 1e3).unwrap();
        let s = SolverSettings::default();
        let up = extremal_solution(&f, Side::Upper, (0.0, 50.0), rho, &s).unwrap();
        // Largest root of x³ − x − 0.2 by Newton from 2.
        let mut r: f64 = 2.0;
        for _ in 0..50 {
            r -= (r * r * r - r - 0.2) / (3.0 * r * r - 1.0);
        }
        assert!((up.at(25.0).unwrap() - r).abs() < 1e-6);
    }
}
