//! Rate, phase and size tipping: scans of the signed gap over a parameter,
//! bisection of its sign changes, the size pair `(d⁻, d⁺)` of split profiles
//! and shift problems `x' = h(t, x − dΓ(t))`.

use crate::classify::{
    default_span, label_or_unclassifiable, Case, CaseLabel, ClassifySettings, TailResiduals,
    TransitionAnalyzer,
};
use crate::field::{CoefficientFn, ParametricFamily, ScalarField, SplitSide, TransitionProfile};
use crate::hyperbolic::in_Rf;
use crate::integrator::Trajectory;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const BISECTION_TOL: f64 = 1e-3;
pub const RATE_POINTS_PER_DECADE: usize = 16;
pub const SIZE_POINTS: usize = 33;
/// Points of `cl Γ(ℝ)` checked for membership in `R_f` by the guard.
pub const GUARD_POINTS: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParameterKind {
    Rate,
    Phase,
    SizeSplit,
    SizeShift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TippingSample {
    pub parameter: f64,
    pub gap: f64,
    pub case: Case,
    pub residual_l: f64,
    pub residual_u: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub value: f64,
    pub half_width: f64,
    pub lo: f64,
    pub hi: f64,
    pub lo_label: CaseLabel,
    pub hi_label: CaseLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TippingResult {
    pub kind: ParameterKind,
    pub range: (f64, f64),
    pub span: (f64, f64),
    pub samples: Vec<TippingSample>,
    pub critical: Vec<CriticalValue>,
    /// Whether the sampled gaps (or `φ`, when computed) are strictly monotone.
    pub monotone: bool,
    /// Samples `(c, φ(c))` of the bifurcation function `φ(c) = 1 − d⁺(Γ^c)`.
    pub phi: Option<Vec<(f64, f64)>>,
    /// `cl Γ(ℝ) ⊂ R_f` was verified, so every sample must be Case A.
    pub guard_all_a: bool,
    /// `(d⁻, d⁺)` for size problems.
    pub size_pair: Option<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl TippingResult {
    pub const CSV_HEADER: &'static str = "parameter,case,gap,residual_u,residual_l";

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        use crate::integrator::csv_number;
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for s in &self.samples {
            writeln!(
                w,
                "{},{},{},{},{}",
                csv_number(s.parameter),
                s.case.name(),
                csv_number(s.gap),
                csv_number(s.residual_u),
                csv_number(s.residual_l)
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TippingOptions {
    pub tol: f64,
    pub points_per_decade: usize,
    pub size_points: usize,
    /// Also sample the bifurcation function of rate problems.
    pub with_phi: bool,
}

impl Default for TippingOptions {
    fn default() -> Self {
        Self {
            tol: BISECTION_TOL,
            points_per_decade: RATE_POINTS_PER_DECADE,
            size_points: SIZE_POINTS,
            with_phi: false,
        }
    }
}

fn tracked_residual(r: &TailResiduals) -> (f64, f64) {
    let min = |v: &[f64; 3]| v.iter().copied().fold(f64::INFINITY, f64::min);
    (min(&r.lower), min(&r.upper))
}

/// The signed gap of the transition equation for profile `Γ`: positive on
/// the Case A side and negative on the Case C side.
pub fn gap_of(
    analyzer: &TransitionAnalyzer,
    profile: &TransitionProfile,
    span: (f64, f64),
) -> Result<f64> {
    Ok(analyzer.analyze(profile, span)?.gap_at_witness)
}

/// `gap_of` for the profile `builder(p)`, with its own analyzer.
pub fn gap_function<B>(
    family: &ParametricFamily,
    builder: B,
    p: f64,
    settings: &ClassifySettings,
) -> Result<f64>
where
    B: Fn(f64) -> TransitionProfile,
{
    let profile = builder(p);
    let span = default_span(&profile);
    let analyzer = TransitionAnalyzer::for_profile(family, &profile, span, settings)?;
    gap_of(&analyzer, &profile, span)
}

/// Symmetric span that fits every profile of the grid.
fn common_span<B: Fn(f64) -> TransitionProfile>(builder: &B, grid: &[f64]) -> (f64, f64) {
    let t = grid
        .iter()
        .map(|&p| default_span(&builder(p)).1)
        .fold(0.0, f64::max);
    (-t, t)
}

fn sample<B>(
    analyzer: &TransitionAnalyzer,
    builder: &B,
    p: f64,
    span: (f64, f64),
) -> Result<(TippingSample, CaseLabel)>
where
    B: Fn(f64) -> TransitionProfile + Sync,
{
    let a = analyzer.analyze(&builder(p), span)?;
    let lab = label_or_unclassifiable(&a, analyzer.settings());
    let (rl, ru) = tracked_residual(&a.residuals);
    Ok((
        TippingSample {
            parameter: p,
            gap: a.gap_at_witness,
            case: lab.case.clone(),
            residual_l: rl,
            residual_u: ru,
        },
        lab,
    ))
}

fn strictly_monotone(values: &[f64], slack: f64) -> bool {
    let inc = values.windows(2).all(|w| w[1] > w[0] - slack);
    let dec = values.windows(2).all(|w| w[1] < w[0] + slack);
    inc || dec
}

/// `cl Γ(ℝ) ⊂ R_f`, checked on a grid of the range including both ends.
pub fn range_in_rf(
    family: &ParametricFamily,
    range: (f64, f64),
    settings: &ClassifySettings,
) -> Result<bool> {
    let n = GUARD_POINTS;
    let pts: Vec<f64> = if range.0 == range.1 {
        vec![range.0]
    } else {
        (0..n)
            .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
            .collect()
    };
    for g in pts {
        if !in_Rf(family, g, &settings.solver)?.member {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Scan of the gap on `grid` and bisection of each sign change to `tol`.
fn scan<B>(
    analyzer: &TransitionAnalyzer,
    builder: &B,
    kind: ParameterKind,
    grid: &[f64],
    span: (f64, f64),
    tol: f64,
    bisect: bool,
) -> Result<TippingResult>
where
    B: Fn(f64) -> TransitionProfile + Sync,
{
    let runs: Vec<(TippingSample, CaseLabel)> = grid
        .par_iter()
        .map(|&p| sample(analyzer, builder, p, span))
        .collect::<Result<_>>()?;
    let samples: Vec<TippingSample> = runs.iter().map(|r| r.0.clone()).collect();
    let mut warnings = Vec::new();
    let mut critical = Vec::new();
    // Endpoints left unlabelled by slow tails are relabelled on a doubled span.
    let mut long_analyzer: Option<Result<TransitionAnalyzer>> = None;
    if bisect {
        for i in 0..runs.len().saturating_sub(1) {
            let (g0, g1) = (runs[i].0.gap, runs[i + 1].0.gap);
            if g0.signum() == g1.signum() || g0 == 0.0 || g1 == 0.0 {
                continue;
            }
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            let (mut lo_label, mut hi_label) = (runs[i].1.clone(), runs[i + 1].1.clone());
            let lo_sign = g0.signum();
            while hi - lo > 2.0 * tol {
                let mid = 0.5 * (lo + hi);
                let (s, lab) = sample(analyzer, builder, mid, span)?;
                if s.gap.signum() == lo_sign {
                    lo = mid;
                    lo_label = lab;
                } else {
                    hi = mid;
                    hi_label = lab;
                }
            }
            if matches!(lo_label.case, Case::Unclassifiable(_))
                || matches!(hi_label.case, Case::Unclassifiable(_))
            {
                let long = long_analyzer.get_or_insert_with(|| {
                    let (gm, gp) = analyzer.limits();
                    TransitionAnalyzer::new(
                        analyzer.family(),
                        gm,
                        gp,
                        2.0 * span.1,
                        analyzer.settings(),
                    )
                });
                if let Ok(long) = long {
                    let long_span = (2.0 * span.0, 2.0 * span.1);
                    for (p, lab) in [(lo, &mut lo_label), (hi, &mut hi_label)] {
                        if matches!(lab.case, Case::Unclassifiable(_)) {
                            if let Ok((_, relabel)) = sample(long, builder, p, long_span) {
                                *lab = relabel;
                            }
                        }
                    }
                }
            }
            critical.push(CriticalValue {
                value: 0.5 * (lo + hi),
                half_width: 0.5 * (hi - lo),
                lo,
                hi,
                lo_label,
                hi_label,
            });
        }
        if critical.len() > 1 {
            warnings.push(format!(
                "{} sign changes of the gap; the list may be incomplete",
                critical.len()
            ));
        }
    }
    let gaps: Vec<f64> = samples.iter().map(|s| s.gap).collect();
    let monotone = strictly_monotone(&gaps, 0.0);
    if !monotone {
        warnings.push("sampled gap is not monotone in the parameter".into());
    }
    Ok(TippingResult {
        kind,
        range: (grid[0], grid[grid.len() - 1]),
        span,
        samples,
        critical,
        monotone,
        phi: None,
        guard_all_a: false,
        size_pair: None,
        warnings,
    })
}

/// Log-spaced grid with `per_decade` points per decade, both ends included.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi / lo).log10() * per_decade as f64).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| {
            if i == n {
                hi
            } else {
                lo * (hi / lo).powf(i as f64 / n as f64)
            }
        })
        .collect()
}

pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let n = points.max(2) - 1;
    (0..=n)
        .map(|i| {
            if i == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / n as f64
            }
        })
        .collect()
}

fn check_range(lo: f64, hi: f64, tol: f64) -> Result<()> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need lo < hi and tol > 0 (got [{lo}, {hi}], tol {tol})"
        )));
    }
    Ok(())
}

fn guarded_scan<B>(
    family: &ParametricFamily,
    base: &TransitionProfile,
    builder: B,
    kind: ParameterKind,
    grid: Vec<f64>,
    options: &TippingOptions,
    settings: &ClassifySettings,
) -> Result<TippingResult>
where
    B: Fn(f64) -> TransitionProfile + Sync,
{
    let span = common_span(&builder, &grid);
    let analyzer = TransitionAnalyzer::for_profile(family, base, span, settings)?;
    let guard = range_in_rf(family, base.range(), settings)?;
    let mut result = scan(&analyzer, &builder, kind, &grid, span, options.tol, !guard)?;
    result.guard_all_a = guard;
    if guard {
        let off: Vec<f64> = result
            .samples
            .iter()
            .filter(|s| s.case != Case::A)
            .map(|s| s.parameter)
            .collect();
        if !off.is_empty() {
            result.warnings.push(format!(
                "range inside R_f but samples {off:?} are not Case A"
            ));
        }
    }
    Ok(result)
}

/// Gap scan over `Γ(ct)` for `c` log-spaced in `[c_lo, c_hi]`, with
/// bisection of sign changes unless the guard `cl Γ(ℝ) ⊂ R_f` holds.
pub fn rate_scan(
    family: &ParametricFamily,
    profile: &TransitionProfile,
    c_lo: f64,
    c_hi: f64,
    options: &TippingOptions,
    settings: &ClassifySettings,
) -> Result<TippingResult> {
    check_range(c_lo, c_hi, options.tol)?;
    if !(c_lo > 0.0) {
        return Err(Error::InvalidArgument("rates must be positive".into()));
    }
    let grid = log_grid(c_lo, c_hi, options.points_per_decade);
    let builder = |c: f64| profile.clone().rate(c);
    let mut result = guarded_scan(
        family,
        profile,
        builder,
        ParameterKind::Rate,
        grid,
        options,
        settings,
    )?;
    if options.with_phi {
        let phi = bifurcation_samples(family, profile, &result, settings)?;
        let values: Vec<f64> = phi.iter().map(|p| p.1).collect();
        result.monotone = strictly_monotone(&values, 0.0);
        result.warnings.retain(|w| !w.starts_with("sampled gap"));
        if !result.monotone {
            result.warnings.push("sampled φ is not monotone".into());
        }
        result.phi = Some(phi);
    }
    Ok(result)
}

/// Critical rates of `Γ(ct)` on `[c_lo, c_hi]`.
pub fn find_rate_tipping(
    family: &ParametricFamily,
    profile: &TransitionProfile,
    c_lo: f64,
    c_hi: f64,
    options: &TippingOptions,
    settings: &ClassifySettings,
) -> Result<TippingResult> {
    let r = rate_scan(family, profile, c_lo, c_hi, options, settings)?;
    if r.critical.is_empty() {
        return Err(Error::NoSignChange { lo: c_lo, hi: c_hi });
    }
    Ok(r)
}

pub fn phase_scan(
    family: &ParametricFamily,
    profile: &TransitionProfile,
    c_lo: f64,
    c_hi: f64,
    options: &TippingOptions,
    settings: &ClassifySettings,
) -> Result<TippingResult> {
    check_range(c_lo, c_hi, options.tol)?;
    let grid = linear_grid(c_lo, c_hi, options.size_points);
    let builder = |c: f64| profile.clone().phase(c);
    guarded_scan(
        family,
        profile,
        builder,
        ParameterKind::Phase,
        grid,
        options,
        settings,
    )
}

/// Critical phases of `Γ(t + c)` on `[c_lo, c_hi]`.
pub fn find_phase_tipping(
    family: &ParametricFamily,
    profile: &TransitionProfile,
    c_lo: f64,
    c_hi: f64,
    options: &TippingOptions,
    settings: &ClassifySettings,
) -> Result<TippingResult> {
    let r = phase_scan(family, profile, c_lo, c_hi, options, settings)?;
    if r.critical.is_empty() {
        return Err(Error::NoSignChange { lo: c_lo, hi: c_hi });
    }
    Ok(r)
}

/// The split side for a profile that overshoots its limits.
pub fn split_side(profile: &TransitionProfile) -> Result<SplitSide> {
    let (a, b) = profile.limits();
    let (lo, hi) = profile.range();
    if hi > a.max(b) {
        Ok(SplitSide::Upper)
    } else if lo < a.min(b) {
        Ok(SplitSide::Lower)
    } else {
        Err(Error::InvalidArgument(
            "profile stays between its limits; no size problem to split".into(),
        ))
    }
}

fn size_pair(result: &mut TippingResult) -> Result<()> {
    let below: Vec<f64> = result
        .critical
        .iter()
        .map(|c| c.value)
        .filter(|&v| v < 0.0)
        .collect();
    let above: Vec<f64> = result
        .critical
        .iter()
        .map(|c| c.value)
        .filter(|&v| v > 0.0)
        .collect();
    match (below.last(), above.first()) {
        (Some(&m), Some(&p)) => {
            result.size_pair = Some((m, p));
            Ok(())
        }
        _ => Err(Error::NoSignChange {
            lo: result.range.0,
            hi: result.range.1,
        }),
    }
}

/// `(d⁻, d⁺)` for the split family `Γ_d = Δ1 + d Δ2` on `[d_lo, d_hi]`.
pub fn find_size_tipping(
    family: &ParametricFamily,
    profile: &TransitionProfile,
    d_lo: f64,
    d_hi: f64,
    options: &TippingOptions,
    settings: &ClassifySettings,
) -> Result<TippingResult> {
    check_range(d_lo, d_hi, options.tol)?;
    if !(d_lo < 0.0 && d_hi > 0.0) {
        return Err(Error::InvalidArgument("size range must contain 0".into()));
    }
    let side = split_side(profile)?;
    let grid = linear_grid(d_lo, d_hi, options.size_points);
    let builder = |d: f64| profile.clone().split(d, side);
    let span = common_span(&builder, &grid);
    let analyzer = TransitionAnalyzer::for_profile(family, profile, span, settings)?;
    let mut result = scan(
        &analyzer,
        &builder,
        ParameterKind::SizeSplit,
        &grid,
        span,
        options.tol,
        true,
    )?;
    size_pair(&mut result)?;
    Ok(result)
}

/// `d⁺` of the split family of `profile` on a given analyzer, located to
/// `tol` by doubling from 1 and bisecting. `None` if no crossing below 2¹⁰.
pub fn split_threshold(
    analyzer: &TransitionAnalyzer,
    profile: &TransitionProfile,
    span: (f64, f64),
    tol: f64,
) -> Result<Option<f64>> {
    let side = split_side(profile)?;
    let gap = |d: f64| gap_of(analyzer, &profile.clone().split(d, side), span);
    let (mut lo, mut hi);
    if gap(1.0)? > 0.0 {
        lo = 1.0;
        hi = 2.0;
        while gap(hi)? > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1024.0 {
                return Ok(None);
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        while gap(lo)? <= 0.0 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-6 {
                return Ok(Some(0.0));
            }
        }
    }
    while hi - lo > 2.0 * tol {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// `(c, 1 − d⁺(Γ^c))` at the scan points of a rate result.
fn bifurcation_samples(
    family: &ParametricFamily,
    profile: &TransitionProfile,
    rate: &TippingResult,
    settings: &ClassifySettings,
) -> Result<Vec<(f64, f64)>> {
    let analyzer = TransitionAnalyzer::for_profile(family, profile, rate.span, settings)?;
    rate.samples
        .par_iter()
        .map(|s| {
            let d = split_threshold(
                &analyzer,
                &profile.clone().rate(s.parameter),
                rate.span,
                1e-4,
            )?;
            Ok((s.parameter, d.map_or(f64::NAN, |d| 1.0 - d)))
        })
        .collect()
}

/// The builder of the profile at parameter `p` for each problem kind. Size
/// shifts drive the additive family with `−p Γ'`.
pub fn parameter_profile(
    kind: ParameterKind,
    profile: &TransitionProfile,
    p: f64,
) -> Result<TransitionProfile> {
    Ok(match kind {
        ParameterKind::Rate => profile.clone().rate(p),
        ParameterKind::Phase => profile.clone().phase(p),
        ParameterKind::SizeSplit => profile.clone().split(p, split_side(profile)?),
        ParameterKind::SizeShift => {
            if !profile.has_derivative() {
                return Err(Error::ProfileNotDifferentiable);
            }
            profile.clone().derivative_profile().scale(-p)
        }
    })
}

/// Gap and case at each grid point, without bisection. For size shifts the
/// family's base field plays the role of `h`.
pub fn sweep(
    family: &ParametricFamily,
    profile: &TransitionProfile,
    kind: ParameterKind,
    grid: &[f64],
    settings: &ClassifySettings,
) -> Result<TippingResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty sweep grid".into()));
    }
    if kind == ParameterKind::Rate && grid.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::InvalidArgument("rates must be positive".into()));
    }
    // Validates the kind against the profile once; the builder cannot fail after.
    parameter_profile(kind, profile, grid[0])?;
    let builder = |p: f64| parameter_profile(kind, profile, p).expect("validated profile");
    let span = common_span(&builder, grid);
    let analyzer = if kind == ParameterKind::SizeShift {
        let fam = ParametricFamily::additive(family.base.clone());
        TransitionAnalyzer::new(&fam, 0.0, 0.0, span.1, settings)?
    } else {
        TransitionAnalyzer::for_profile(family, profile, span, settings)?
    };
    scan(&analyzer, &builder, kind, grid, span, BISECTION_TOL, false)
}

/// `y' = h(t, y) − d Γ'(t)`, the field of `y = x − dΓ(t)` for the shift
/// problem `x' = h(t, x − dΓ(t))`.
pub fn shift_field(h: &ScalarField, profile: &TransitionProfile, d: f64) -> Result<ScalarField> {
    if !profile.has_derivative() {
        return Err(Error::ProfileNotDifferentiable);
    }
    if d == 0.0 {
        return Ok(h.clone());
    }
    Ok(h.with_forcing(
        CoefficientFn::TransitionRate {
            profile: profile.clone(),
        }
        .scaled(-d),
    ))
}

/// The x-trajectory `x = y + dΓ(t)` from a solution `y` of the shifted field.
pub fn unshift(
    h: &ScalarField,
    y: &Trajectory,
    profile: &TransitionProfile,
    d: f64,
) -> Result<Trajectory> {
    let times = y.times().to_vec();
    let xs: Vec<f64> = times
        .iter()
        .zip(y.values())
        .map(|(&t, &v)| v + d * profile.eval(t))
        .collect();
    let (dx, dix): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(y.values())
        .map(|(&t, &v)| h.value_and_slope(t, v))
        .unzip();
    Trajectory::from_samples(times, xs, &dx, y.integrals().to_vec(), &dix)
}

/// `(d⁻, d⁺)` for the shift problem, through the additive family of `h`
/// driven by `−dΓ'`.
pub fn find_shift_tipping(
    h: &ScalarField,
    profile: &TransitionProfile,
    d_lo: f64,
    d_hi: f64,
    options: &TippingOptions,
    settings: &ClassifySettings,
) -> Result<TippingResult> {
    check_range(d_lo, d_hi, options.tol)?;
    if !profile.has_derivative() {
        return Err(Error::ProfileNotDifferentiable);
    }
    if !(d_lo < 0.0 && d_hi > 0.0) {
        return Err(Error::InvalidArgument("size range must contain 0".into()));
    }
    let family = ParametricFamily::additive(h.clone());
    let rate = profile.clone().derivative_profile();
    let builder = |d: f64| rate.clone().scale(-d);
    let grid = linear_grid(d_lo, d_hi, options.size_points);
    let span = common_span(&builder, &grid);
    let analyzer = TransitionAnalyzer::new(&family, 0.0, 0.0, span.1, settings)?;
    let mut result = scan(
        &analyzer,
        &builder,
        ParameterKind::SizeShift,
        &grid,
        span,
        options.tol,
        true,
    )?;
    size_pair(&mut result)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, IntegratorSettings};

    fn toy() -> ParametricFamily {
        ParametricFamily::additive(ScalarField::polynomial([0.0, 1.0, 0.0, -1.0]))
    }

    #[test]
    fn grids_include_ends() {
        let g = log_grid(0.1, 1.0, 16);
        assert_eq!(g.len(), 17);
        assert_eq!((g[0], g[16]), (0.1, 1.0));
        let l = linear_grid(-1.0, 1.0, 33);
        assert_eq!(l.len(), 33);
        assert_eq!(l[16], 0.0);
    }

    #[test]
    fn constant_profile_gap_is_positive_and_rate_free() {
        let p = TransitionProfile::constant(0.1);
        let s = ClassifySettings::default();
        let g1 = gap_function(&toy(), |c| p.clone().rate(c), 0.5, &s).unwrap();
        let g2 = gap_function(&toy(), |c| p.clone().rate(c), 2.0, &s).unwrap();
        assert!(g1 > 0.0);
        assert_eq!(g1, g2);
    }

    #[test]
    fn guard_skips_bisection_inside_rf() {
        let p = TransitionProfile::gaussian_impulse(0.0, 0.2, 10.0);
        let r = rate_scan(
            &toy(),
            &p,
            0.1,
            10.0,
            &TippingOptions::default(),
            &ClassifySettings::default(),
        )
        .unwrap();
        assert!(r.guard_all_a);
        assert!(r.critical.is_empty());
        assert!(r.samples.iter().all(|s| s.case == Case::A));
    }

    #[test]
    fn shift_of_arctan_ramp_is_closed_form() {
        let h = ScalarField::polynomial([0.0, 1.0, 0.0, -1.0]);
        let p = TransitionProfile::arctan_sigmoid(0.0, 1.0);
        let g = shift_field(&h, &p, 0.7).unwrap();
        for t in [-3.0, 0.0, 0.4, 10.0] {
            let expect = h.eval(t, 0.3, 0) - 0.7 / (std::f64::consts::PI * (1.0 + t * t));
            assert!((g.eval(t, 0.3, 0) - expect).abs() < 1e-15);
        }
        assert_eq!(shift_field(&h, &p, 0.0).unwrap(), h);
        let sampled = TransitionProfile::sampled(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            shift_field(&h, &sampled, 1.0),
            Err(Error::ProfileNotDifferentiable)
        ));
    }

    #[test]
    fn unshift_solves_the_original_equation() {
        let h = ScalarField::polynomial([0.0, 1.0, 0.0, -1.0]);
        let p = TransitionProfile::arctan_sigmoid(0.0, 1.0);
        let d = 0.3;
        let g = shift_field(&h, &p, d).unwrap();
        let y = integrate(&g, -20.0, 0.8, 20.0, &IntegratorSettings::default()).unwrap();
        let x = unshift(&h, &y, &p, d).unwrap();
        // x' = h(t, x − dΓ) checked by central differences of the dense output.
        let e = 1e-4;
        for i in 1..400 {
            let t = -20.0 + 0.1 * i as f64;
            let dx = (x.at(t + e).unwrap() - x.at(t - e).unwrap()) / (2.0 * e);
            let rhs = h.eval(t, x.at(t).unwrap() - d * p.eval(t), 0);
            assert!((dx - rhs).abs() < 1e-6, "{t}: {dx} vs {rhs}");
        }
    }
}
