//! Classification of a transition equation `x' = f(t, x, Γ(t))` into the
//! cases A, B1, B2, C1, C2 from its extremal solutions `l_Γ`, `u_Γ`, the
//! solution `m_Γ` approaching the future middle solution, and the future
//! frozen triple.

use crate::field::{family_radius, ParametricFamily, TransitionProfile};
use crate::hyperbolic::{
    extremal_solution, in_Rf, signed_min_gap, triple_on, HyperbolicTriple, RfCertificate, Side,
    SolverSettings, TripleOutcome, COERCIVITY_SEARCH_BOUND,
};
use crate::integrator::{csv_number, integrate, Status, Trajectory};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// A tail residual below this counts as tracking.
pub const TRACKING_TOL: f64 = 1e-4;
/// `|gap|` below this reports Case B.
pub const TOL_B: f64 = 1e-5;
/// Profiles are within this of their limits beyond the clamp horizon.
pub const CLAMP_EPS: f64 = 1e-10;
/// Shortest span admitted for the future frozen triple.
pub const MIN_FUTURE_SPAN: f64 = 200.0;
/// Longest transition span analysed; slower profiles are rejected.
pub const MAX_SPAN: f64 = 2e4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    A,
    B1,
    B2,
    C1,
    C2,
    Unclassifiable(String),
}

impl Case {
    pub fn name(&self) -> &str {
        match self {
            Case::A => "A",
            Case::B1 => "B1",
            Case::B2 => "B2",
            Case::C1 => "C1",
            Case::C2 => "C2",
            Case::Unclassifiable(_) => "Unclassifiable",
        }
    }

    pub fn is_tipping(&self) -> bool {
        matches!(self, Case::C1 | Case::C2)
    }

    pub fn is_b(&self) -> bool {
        matches!(self, Case::B1 | Case::B2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifySettings {
    pub solver: SolverSettings,
    pub tracking_tol: f64,
    pub tol_b: f64,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        Self {
            solver: SolverSettings::default(),
            tracking_tol: TRACKING_TOL,
            tol_b: TOL_B,
        }
    }
}

/// Sup distances over the tail window to `(l̃, m̃, ũ)` of the future triple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailResiduals {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseLabel {
    pub case: Case,
    /// `min(m_Γ − l_Γ, u_Γ − m_Γ)` over the part of the span where `m_Γ` exists.
    pub gap: f64,
    /// The same minimum at the witness time.
    pub gap_at_witness: f64,
    pub t_gamma: f64,
    pub residuals: TailResiduals,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub span: (f64, f64),
    pub tail_window: (f64, f64),
    /// Earliest time reached by the backward run of `m_Γ`.
    pub m_start: f64,
    pub m_blew_up: bool,
}

impl CaseLabel {
    pub const CSV_HEADER: &'static str = "case,gap,gap_at_witness,t_gamma,res_l_lower,res_l_middle,res_l_upper,res_u_lower,res_u_middle,res_u_upper";

    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.case.name().to_string(),
            csv_number(self.gap),
            csv_number(self.gap_at_witness),
            csv_number(self.t_gamma),
        ];
        cols.extend(self.residuals.lower.iter().map(|&v| csv_number(v)));
        cols.extend(self.residuals.upper.iter().map(|&v| csv_number(v)));
        cols.join(",")
    }
}

/// Raw data of one transition run, before labelling.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub lower: Trajectory,
    pub middle: Trajectory,
    pub upper: Trajectory,
    pub gap: f64,
    pub gap_at_witness: f64,
    /// `(m − l, u − m)` at the witness, when `m_Γ` reaches it.
    pub witness_parts: Option<(f64, f64)>,
    pub t_gamma: f64,
    pub residuals: TailResiduals,
    pub span: (f64, f64),
    pub tail_window: (f64, f64),
    pub gamma_minus: f64,
    pub gamma_plus: f64,
}

/// Transition analysis for a fixed pair of limits and end time. The R_f
/// checks and the future frozen triple are computed once and shared by every
/// profile analysed.
#[derive(Clone, Debug)]
pub struct TransitionAnalyzer {
    family: ParametricFamily,
    settings: ClassifySettings,
    gamma_minus: f64,
    gamma_plus: f64,
    t_end: f64,
    past: RfCertificate,
    future_cert: RfCertificate,
    future: Box<HyperbolicTriple>,
}

fn same_limit(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn rf_reason(cert: &RfCertificate) -> String {
    match (&cert.not_found, cert.h5_pass) {
        (Some(n), _) => format!("{n:?}"),
        (None, false) => format!(
            "strict d-concavity fails (worst f_xxx = {:.3e})",
            cert.h5_margin
        ),
        _ => "unknown".into(),
    }
}

/// Symmetric span `[−T, T]` long enough for `profile`: `T ≥ 2 H` with `H`
/// the clamp horizon, and `0.8 T` clear of the transition.
pub fn default_span(profile: &TransitionProfile) -> (f64, f64) {
    let t = (2.0 * profile.horizon(CLAMP_EPS)).max(250.0);
    (-t, t)
}

impl TransitionAnalyzer {
    pub fn new(
        family: &ParametricFamily,
        gamma_minus: f64,
        gamma_plus: f64,
        t_end: f64,
        settings: &ClassifySettings,
    ) -> Result<Self> {
        let future_cert = in_Rf(family, gamma_plus, &settings.solver)?;
        if !future_cert.member {
            return Err(Error::FutureNotInRf {
                gamma: gamma_plus,
                reason: rf_reason(&future_cert),
            });
        }
        let past = if same_limit(gamma_minus, gamma_plus) {
            future_cert.clone()
        } else {
            in_Rf(family, gamma_minus, &settings.solver)?
        };
        if !past.member {
            return Err(Error::PastNotInRf {
                gamma: gamma_minus,
                reason: rf_reason(&past),
            });
        }
        if t_end > MAX_SPAN {
            return Err(Error::InvalidArgument(format!(
                "end time {t_end:.3e} exceeds the span limit {MAX_SPAN:e}"
            )));
        }
        let len = MIN_FUTURE_SPAN.max(0.2 * t_end.abs());
        let span = (t_end - len, t_end);
        let field = family.freeze(gamma_plus);
        let rho = family_radius(
            family,
            (gamma_plus, gamma_plus),
            1.0,
            COERCIVITY_SEARCH_BOUND,
        )?;
        let future = match triple_on(&field, gamma_plus, span, rho, &settings.solver)? {
            TripleOutcome::Found(t) => t,
            TripleOutcome::NotFound(n) => {
                return Err(Error::FutureNotInRf {
                    gamma: gamma_plus,
                    reason: format!("no triple on the tail span: {n:?}"),
                })
            }
        };
        Ok(Self {
            family: family.clone(),
            settings: settings.clone(),
            gamma_minus,
            gamma_plus,
            t_end,
            past,
            future_cert,
            future,
        })
    }

    /// Analyzer for `profile` on its own limits.
    pub fn for_profile(
        family: &ParametricFamily,
        profile: &TransitionProfile,
        span: (f64, f64),
        settings: &ClassifySettings,
    ) -> Result<Self> {
        let (gm, gp) = profile.limits();
        Self::new(family, gm, gp, span.1, settings)
    }

    pub fn family(&self) -> &ParametricFamily {
        &self.family
    }

    pub fn settings(&self) -> &ClassifySettings {
        &self.settings
    }

    pub fn future(&self) -> &HyperbolicTriple {
        &self.future
    }

    pub fn past_certificate(&self) -> &RfCertificate {
        &self.past
    }

    pub fn future_certificate(&self) -> &RfCertificate {
        &self.future_cert
    }

    pub fn limits(&self) -> (f64, f64) {
        (self.gamma_minus, self.gamma_plus)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn analyze(&self, profile: &TransitionProfile, span: (f64, f64)) -> Result<Analysis> {
        let (gm, gp) = profile.limits();
        if !same_limit(gm, self.gamma_minus) || !same_limit(gp, self.gamma_plus) {
            return Err(Error::InvalidArgument(format!(
                "profile limits ({gm}, {gp}) differ from the analyzer's ({}, {})",
                self.gamma_minus, self.gamma_plus
            )));
        }
        if span.1 != self.t_end || !(span.0 < span.1) {
            return Err(Error::InvalidArgument(format!(
                "span must end at {} (got {:?})",
                self.t_end, span
            )));
        }
        let clamp = profile.horizon(CLAMP_EPS);
        if span.1 - span.0 > MAX_SPAN || 2.0 * clamp > MAX_SPAN {
            return Err(Error::InvalidArgument(format!(
                "span {:?} (clamp horizon {clamp:.3e}) exceeds the limit {MAX_SPAN:e}; \
                 the profile converges too slowly",
                span
            )));
        }
        if span.1 < clamp || span.0 > -clamp {
            return Err(Error::InsufficientSpan {
                needed: 2.0 * clamp,
                available: span.1 - span.0,
            });
        }
        let tail_window = (0.8 * span.1, span.1);
        if tail_window.0 < self.future.span.0 || tail_window.0 < clamp {
            return Err(Error::InsufficientSpan {
                needed: clamp / 0.8,
                available: span.1,
            });
        }

        let field = self.family.compose(profile);
        let (r_lo, r_hi) = profile.range();
        let range = (r_lo.min(gm).min(gp), r_hi.max(gm).max(gp));
        let rho = family_radius(&self.family, range, 1.0, COERCIVITY_SEARCH_BOUND)?;
        let solver = &self.settings.solver;
        let lower = extremal_solution(&field, Side::Lower, span, rho, solver)?;
        let upper = extremal_solution(&field, Side::Upper, span, rho, solver)?;

        // m_Γ: backward from the future middle solution at the end time.
        let integ = solver.integrator.with_default_guard(rho);
        let m_end = self.future.middle.at(span.1)?;
        let middle = integrate(&field, span.1, m_end, span.0, &integ)?;

        let from = middle.start().max(span.0);
        let gap = signed_min_gap(&lower, &middle, (from, span.1))?.min(signed_min_gap(
            &middle,
            &upper,
            (from, span.1),
        )?);
        let t_gamma = witness_time(profile, span);
        let witness_parts = if middle.covers(t_gamma) {
            let m = middle.at(t_gamma)?;
            Some((m - lower.at(t_gamma)?, upper.at(t_gamma)? - m))
        } else {
            None
        };
        let gap_at_witness = witness_parts.map_or(gap, |(a, b)| a.min(b));

        let f = &self.future;
        let (a, b) = tail_window;
        let res = |x: &Trajectory| -> Result<[f64; 3]> {
            Ok([
                x.sup_distance(&f.lower, a, b)?,
                x.sup_distance(&f.middle, a, b)?,
                x.sup_distance(&f.upper, a, b)?,
            ])
        };
        let residuals = TailResiduals {
            lower: res(&lower)?,
            upper: res(&upper)?,
        };
        Ok(Analysis {
            lower,
            middle,
            upper,
            gap,
            gap_at_witness,
            witness_parts,
            t_gamma,
            residuals,
            span,
            tail_window,
            gamma_minus: self.gamma_minus,
            gamma_plus: self.gamma_plus,
        })
    }

    pub fn classify(&self, profile: &TransitionProfile, span: (f64, f64)) -> Result<CaseLabel> {
        let a = self.analyze(profile, span)?;
        label(&a, &self.settings)
    }
}

/// Witness time: the latest time where `|Γ'|` peaks (up to a relative
/// 1e-9), or the span midpoint. Late witnesses are where the backward run
/// of `m_Γ` is most likely still defined.
pub fn witness_time(profile: &TransitionProfile, span: (f64, f64)) -> f64 {
    let mid = 0.5 * (span.0 + span.1);
    if !profile.has_derivative() {
        return mid;
    }
    let h = profile.horizon(1e-6).max(1.0).min(span.1.min(-span.0));
    let n = 8000;
    let grid: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let t = -h + 2.0 * h * i as f64 / n as f64;
            (t, profile.derivative(t).unwrap_or(0.0).abs())
        })
        .collect();
    let peak = grid.iter().map(|g| g.1).fold(0.0, f64::max);
    if peak == 0.0 {
        return mid;
    }
    grid.iter()
        .rev()
        .find(|g| g.1 >= peak * (1.0 - 1e-9))
        .map_or(mid, |g| g.0)
}

/// Index of the unique residual below `tol`, if exactly one is.
fn tracked(res: &[f64; 3], tol: f64) -> Option<usize> {
    let below: Vec<usize> = (0..3).filter(|&i| res[i] < tol).collect();
    (below.len() == 1).then(|| below[0])
}

/// Labels an analysis. The tail residuals give one case, the sign of the
/// witness gap another; disagreement is an error.
pub fn label(a: &Analysis, settings: &ClassifySettings) -> Result<CaseLabel> {
    const NAMES: [&str; 3] = ["lower", "middle", "upper"];
    let tol = settings.tracking_tol;
    let l = tracked(&a.residuals.lower, tol);
    let u = tracked(&a.residuals.upper, tol);
    let tail_case = match (l, u) {
        (Some(0), Some(2)) => Case::A,
        (Some(1), Some(2)) => Case::B1,
        (Some(2), Some(2)) => Case::C1,
        (Some(0), Some(1)) => Case::B2,
        (Some(0), Some(0)) => Case::C2,
        _ => Case::Unclassifiable(format!(
            "tails do not match the future triple: l_Γ {}, u_Γ {}",
            l.map_or("tracks none or several".to_string(), |i| format!(
                "tracks {}",
                NAMES[i]
            )),
            u.map_or("tracks none or several".to_string(), |i| format!(
                "tracks {}",
                NAMES[i]
            )),
        )),
    };
    let g = a.gap_at_witness;
    let case = if !g.is_finite() {
        Case::Unclassifiable(format!("gap is not finite ({g})"))
    } else if g.abs() < settings.tol_b {
        // B reported on gap collapse; the tails choose which solution is lost.
        match (&tail_case, a.witness_parts) {
            (Case::B1 | Case::B2, _) => tail_case.clone(),
            (_, Some((ml, um))) if ml <= um => Case::B1,
            (_, Some(_)) => Case::B2,
            (_, None) => Case::Unclassifiable("gap collapsed without a witness value".into()),
        }
    } else {
        let gap_says_a = g > 0.0;
        match &tail_case {
            Case::A if gap_says_a => Case::A,
            Case::C1 | Case::C2 if !gap_says_a => tail_case.clone(),
            Case::Unclassifiable(_) => tail_case.clone(),
            other => {
                return Err(Error::InconsistentCriteria {
                    tail: other.name().to_string(),
                    gap: format!("{g:.6e}"),
                })
            }
        }
    };
    Ok(CaseLabel {
        case,
        gap: a.gap,
        gap_at_witness: a.gap_at_witness,
        t_gamma: a.t_gamma,
        residuals: a.residuals,
        gamma_minus: a.gamma_minus,
        gamma_plus: a.gamma_plus,
        span: a.span,
        tail_window: a.tail_window,
        m_start: a.middle.start(),
        m_blew_up: a.middle.blew_up(),
    })
}

/// Label of an analysis, with disagreements folded into `Unclassifiable`.
pub fn label_or_unclassifiable(a: &Analysis, settings: &ClassifySettings) -> CaseLabel {
    label(a, settings).unwrap_or_else(|e| CaseLabel {
        case: Case::Unclassifiable(e.to_string()),
        gap: a.gap,
        gap_at_witness: a.gap_at_witness,
        t_gamma: a.t_gamma,
        residuals: a.residuals,
        gamma_minus: a.gamma_minus,
        gamma_plus: a.gamma_plus,
        span: a.span,
        tail_window: a.tail_window,
        m_start: a.middle.start(),
        m_blew_up: a.middle.blew_up(),
    })
}

/// One-shot classification.
pub fn classify(
    family: &ParametricFamily,
    profile: &TransitionProfile,
    span: (f64, f64),
    settings: &ClassifySettings,
) -> Result<CaseLabel> {
    TransitionAnalyzer::for_profile(family, profile, span, settings)?.classify(profile, span)
}

/// `t, l, m, u` on a uniform grid; `m` is NaN where its backward run did not reach.
pub fn write_solutions_csv<W: Write>(a: &Analysis, mut w: W, step: f64) -> std::io::Result<()> {
    writeln!(w, "t,l_gamma,m_gamma,u_gamma")?;
    let n = ((a.span.1 - a.span.0) / step).round() as usize;
    for i in 0..=n {
        let t = if i == n {
            a.span.1
        } else {
            a.span.0 + i as f64 * step
        };
        let m = if a.middle.covers(t) {
            a.middle.at(t).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        writeln!(
            w,
            "{},{},{},{}",
            csv_number(t),
            csv_number(a.lower.at(t).unwrap_or(f64::NAN)),
            csv_number(m),
            csv_number(a.upper.at(t).unwrap_or(f64::NAN)),
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub s: f64,
    pub x0: f64,
    /// `"upper"`, `"lower"` or `"inside"` relative to `[l_Γ(s), u_Γ(s)]`.
    pub position: String,
    /// `|x(T) − target(T)|` for the nearest extremal solution.
    pub final_distance: Option<f64>,
    pub converged: Option<bool>,
    /// Future triple member closest at the end time.
    pub tracks: String,
    /// First time `|x| ≤ ρ`.
    pub entered_absorbing: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub case: Case,
    pub rho: f64,
    pub probes: Vec<ProbeResult>,
    /// Every probe outside `[l_Γ, u_Γ]` approached its nearest extremal solution.
    pub all_converge: bool,
    /// Case A requires every probe to converge; other labels impose nothing.
    pub consistent: bool,
}

/// Forward trajectories from `(s, x0)` compared with the extremal solutions.
pub fn forward_attraction_probe(
    analyzer: &TransitionAnalyzer,
    analysis: &Analysis,
    label: &CaseLabel,
    profile: &TransitionProfile,
    probes: &[(f64, f64)],
) -> Result<ProbeReport> {
    let field = analyzer.family.compose(profile);
    let (r_lo, r_hi) = profile.range();
    let rho = family_radius(&analyzer.family, (r_lo, r_hi), 1.0, COERCIVITY_SEARCH_BOUND)?;
    let integ = analyzer.settings.solver.integrator.with_default_guard(rho);
    let end = analysis.span.1;
    let mut out = Vec::new();
    for &(s, x0) in probes {
        let tr = integrate(&field, s, x0, end, &integ)?;
        if let Status::BlowUp { t, sign } = tr.status() {
            return Err(Error::BlowUp { t, sign });
        }
        let entered_absorbing = tr
            .times()
            .iter()
            .zip(tr.values())
            .find(|(_, x)| x.abs() <= rho)
            .map(|(t, _)| *t);
        let (l, u) = (analysis.lower.at(s)?, analysis.upper.at(s)?);
        let target = if x0 > u {
            Some(("upper", &analysis.upper))
        } else if x0 < l {
            Some(("lower", &analysis.lower))
        } else {
            None
        };
        let x_end = tr.terminal_value();
        let fut = analyzer.future();
        let members = [
            ("lower", &fut.lower),
            ("middle", &fut.middle),
            ("upper", &fut.upper),
        ];
        let mut tracks = ("none", f64::INFINITY);
        for (name, m) in members {
            let d = (m.at(end)? - x_end).abs();
            if d < tracks.1 {
                tracks = (name, d);
            }
        }
        let (position, final_distance) = match target {
            Some((name, sol)) => (name.to_string(), Some((sol.at(end)? - x_end).abs())),
            None => ("inside".to_string(), None),
        };
        out.push(ProbeResult {
            s,
            x0,
            position,
            final_distance,
            converged: final_distance.map(|d| d < analyzer.settings.tracking_tol),
            tracks: tracks.0.to_string(),
            entered_absorbing,
        });
    }
    let all_converge = out.iter().all(|p| p.converged != Some(false));
    let consistent = label.case != Case::A || all_converge;
    Ok(ProbeReport {
        case: label.case.clone(),
        rho,
        probes: out,
        all_converge,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;

    fn toy() -> ParametricFamily {
        ParametricFamily::additive(ScalarField::polynomial([0.0, 1.0, 0.0, -1.0]))
    }

    #[test]
    fn constant_profile_is_case_a() {
        let p = TransitionProfile::constant(0.1);
        let span = default_span(&p);
        let lab = classify(&toy(), &p, span, &ClassifySettings::default()).unwrap();
        assert_eq!(lab.case, Case::A);
        assert!(lab.gap > 0.5 && lab.gap_at_witness > 0.5);
        assert!(!lab.m_blew_up);
    }

    #[test]
    fn large_pulse_tips_upward() {
        // A short pulse to γ = 2 pushes l_Γ over the fold.
        let p = TransitionProfile::gaussian_impulse(0.0, 2.0, 10.0);
        let span = default_span(&p);
        let lab = classify(&toy(), &p, span, &ClassifySettings::default()).unwrap();
        assert_eq!(lab.case, Case::C1);
        assert!(lab.gap_at_witness < 0.0);
        let small = TransitionProfile::gaussian_impulse(0.0, 0.3, 10.0);
        let lab = classify(
            &toy(),
            &small,
            default_span(&small),
            &ClassifySettings::default(),
        )
        .unwrap();
        assert_eq!(lab.case, Case::A);
    }

    #[test]
    fn negative_pulse_tips_downward() {
        let p = TransitionProfile::gaussian_impulse(0.0, -2.0, 10.0);
        let lab = classify(&toy(), &p, default_span(&p), &ClassifySettings::default()).unwrap();
        assert_eq!(lab.case, Case::C2);
    }

    #[test]
    fn future_outside_rf_is_an_error() {
        let p = TransitionProfile::arctan_sigmoid(0.0, 1.0);
        let err = classify(&toy(), &p, default_span(&p), &ClassifySettings::default()).unwrap_err();
        assert!(matches!(err, Error::FutureNotInRf { .. }));
        let p = TransitionProfile::arctan_sigmoid(-1.0, 0.0);
        let err = classify(&toy(), &p, default_span(&p), &ClassifySettings::default()).unwrap_err();
        assert!(matches!(err, Error::PastNotInRf { .. }), "{err:?}");
    }

    #[test]
    fn csv_row_has_header_width() {
        let p = TransitionProfile::constant(0.0);
        let lab = classify(&toy(), &p, default_span(&p), &ClassifySettings::default()).unwrap();
        let n = CaseLabel::CSV_HEADER.split(',').count();
        assert_eq!(lab.csv_row().split(',').count(), n);
        assert!(lab.csv_row().starts_with("A,"));
    }

    #[test]
    fn probes_converge_in_case_a() {
        let p = TransitionProfile::gaussian_impulse(0.0, 0.2, 10.0);
        let span = default_span(&p);
        let s = ClassifySettings::default();
        let an = TransitionAnalyzer::for_profile(&toy(), &p, span, &s).unwrap();
        let a = an.analyze(&p, span).unwrap();
        let lab = label(&a, &s).unwrap();
        let rep = forward_attraction_probe(
            &an,
            &a,
            &lab,
            &p,
            &[(-50.0, 5.0), (-50.0, -5.0), (0.0, 0.0)],
        )
        .unwrap();
        assert!(rep.all_converge && rep.consistent);
        assert_eq!(rep.probes[2].position, "inside");
        assert_eq!(rep.probes[0].tracks, "upper");
        assert!(rep.probes[0].entered_absorbing.is_some());
    }
}
