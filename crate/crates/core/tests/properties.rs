use proptest::prelude::*;
use tippinglab::classify::{Case, ClassifySettings};
use tippinglab::field::{
    coercivity_radius, CoefficientFn, ParametricFamily, ScalarField, TransitionProfile,
};
use tippinglab::hyperbolic::{
    dichotomy_exponent, extremal_solution, frozen_triple, NotFound, Side, SolverSettings,
    TripleOutcome,
};
use tippinglab::integrator::{integrate, IntegratorSettings};
use tippinglab::tipping::{sweep, ParameterKind};

const FOLD: f64 = 0.384_900_179_459_750_5; // 2/(3√3)

fn toy() -> ParametricFamily {
    ParametricFamily::additive(ScalarField::polynomial([0.0, 1.0, 0.0, -1.0]))
}

/// Real roots of `x³ − x − λ = 0` for `|λ| < 2/(3√3)`, ascending.
fn cubic_roots(lambda: f64) -> [f64; 3] {
    let r = 2.0 / 3f64.sqrt();
    let theta = (3.0 * 3f64.sqrt() * lambda / 2.0).acos() / 3.0;
    let mut x = [0, 1, 2].map(|k| r * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos());
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    x
}

fn cubic_pair(a: f64, b: f64, e1: f64, c: f64, e2: f64) -> (ScalarField, ScalarField) {
    let f1 = ScalarField::polynomial([b, a, 0.0, -1.0])
        .plus(&ScalarField::power(CoefficientFn::sin2(e1, 1.0), 0));
    let f2 = f1
        .plus(&ScalarField::polynomial([c, 0.0, 0.0, 0.0]))
        .plus(&ScalarField::power(CoefficientFn::sin2(e2, 2f64.sqrt()), 0));
    (f1, f2)
}

#[test]
fn triple_existence_switches_at_the_fold() {
    let s = SolverSettings::default();
    for sign in [-1.0, 1.0] {
        let inside = frozen_triple(&toy(), sign * (FOLD - 1e-4), (0.0, 300.0), &s).unwrap();
        assert!(inside.found().is_some(), "inside {sign}");
        let outside = frozen_triple(&toy(), sign * (FOLD + 1e-4), (0.0, 300.0), &s).unwrap();
        assert!(
            matches!(outside, TripleOutcome::NotFound(NotFound::Collapsed { .. })),
            "outside {sign}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dichotomy_of_linear_equation_recovers_the_coefficient(
        mag in 0.1f64..3.0,
        negative in any::<bool>(),
    ) {
        let a = if negative { -mag } else { mag };
        let tr = integrate(&ScalarField::polynomial([0.0, a, 0.0, 0.0]), 0.0, 0.0, 80.0, &IntegratorSettings::default()).unwrap();
        let est = dichotomy_exponent(&tr, 5.0).unwrap();
        prop_assert!((est.sup - a).abs() < 1e-9 && (est.inf - a).abs() < 1e-9);
        prop_assert_eq!(est.is_attractive(), a < 0.0);
    }

    #[test]
    fn constant_profile_family_is_always_tracked(
        base in -0.3f64..0.3,
        peak in -0.3f64..0.3,
        phase in -5.0f64..5.0,
    ) {
        let p = TransitionProfile::gaussian_impulse(base, peak, 4.0).phase(phase);
        let s = ClassifySettings::default();
        for kind in [ParameterKind::Rate, ParameterKind::Phase] {
            let grid: &[f64] = if kind == ParameterKind::Rate { &[0.1, 1.0, 5.0] } else { &[-20.0, 0.0, 20.0] };
            let r = sweep(&toy(), &p, kind, grid, &s).unwrap();
            prop_assert!(r.samples.iter().all(|x| x.case == Case::A));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn frozen_triple_matches_the_cubic_roots(lambda in -0.37f64..0.37) {
        let out = frozen_triple(&toy(), lambda, (0.0, 300.0), &SolverSettings::default()).unwrap();
        let tr = out.found().expect("triple inside the fold");
        let roots = cubic_roots(lambda);
        for t in [0.0, 150.0, 300.0] {
            let got = [tr.lower.at(t).unwrap(), tr.middle.at(t).unwrap(), tr.upper.at(t).unwrap()];
            for (g, r) in got.iter().zip(roots) {
                prop_assert!((g - r).abs() < 1e-6, "λ = {lambda}: {g} vs {r}");
            }
        }
    }

    #[test]
    fn no_triple_beyond_the_fold(mag in 0.386f64..2.0, negative in any::<bool>()) {
        let lambda = if negative { -mag } else { mag };
        let out = frozen_triple(&toy(), lambda, (0.0, 300.0), &SolverSettings::default()).unwrap();
        prop_assert!(out.found().is_none());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn ordered_fields_have_ordered_extremal_solutions(
        a in -1.0f64..2.0,
        b in -1.0f64..1.0,
        e1 in 0.0f64..1.0,
        c in 0.0f64..1.0,
        e2 in 0.0f64..1.0,
    ) {
        let (f1, f2) = cubic_pair(a, b, e1, c, e2);
        let rho = coercivity_radius(&f1, 1.0, 1e6).unwrap().max(coercivity_radius(&f2, 1.0, 1e6).unwrap());
        let s = SolverSettings::default();
        let span = (0.0, 100.0);
        for side in [Side::Lower, Side::Upper] {
            let x1 = extremal_solution(&f1, side, span, rho, &s).unwrap();
            let x2 = extremal_solution(&f2, side, span, rho, &s).unwrap();
            for i in 0..=100 {
                let t = i as f64;
                prop_assert!(x1.at(t).unwrap() <= x2.at(t).unwrap() + 1e-7, "{side:?} at {t}");
            }
        }
    }
}
