use tippinglab::field::{family_radius, TransitionProfile};
use tippinglab::hyperbolic::{extremal_solution, Side, SolverSettings, COERCIVITY_SEARCH_BOUND};
use tippinglab::models::{
    allee_type, balance_average, build_model, collapse_scan, holling3_strong_scenario,
    holling3_weak_scenario, i_beta_sup, predation_ramp, AlleeType, ModelKind,
};

#[test]
fn zero_exponent_by_quadrature_matches_the_integrator() {
    let s = SolverSettings::default();
    for model in [holling3_strong_scenario(), holling3_weak_scenario()] {
        let rep = allee_type(&model, 0.0, 600.0, &s).unwrap();
        let (quad, column) = rep.zero_integral;
        assert!(
            (quad - column).abs() <= 1e-7 * quad.abs().max(1.0),
            "{quad} vs {column}"
        );
    }
}

#[test]
fn allee_types_of_the_predation_scenarios() {
    let s = SolverSettings::default();
    let strong = allee_type(&holling3_strong_scenario(), 0.0, 800.0, &s).unwrap();
    assert_eq!(strong.allee_type, AlleeType::Strong);
    let (lo, hi) = strong.strength_ratios.unwrap();
    assert!(0.0 < lo && lo <= hi && hi < 1.0);
    let weak = allee_type(&holling3_weak_scenario(), 0.0, 800.0, &s).unwrap();
    assert_eq!(weak.allee_type, AlleeType::Weak);
    assert!(weak.zero_dichotomy.is_repulsive());
}

#[test]
fn balance_of_the_upper_solution_is_a_log_difference() {
    let model = holling3_strong_scenario();
    let field = model.family.freeze(0.0);
    let rho = family_radius(&model.family, (0.0, 0.0), 1.0, COERCIVITY_SEARCH_BOUND).unwrap();
    let u = extremal_solution(
        &field,
        Side::Upper,
        (0.0, 400.0),
        rho,
        &SolverSettings::default(),
    )
    .unwrap();
    for (a, b) in [(0.0, 100.0), (50.0, 400.0)] {
        let avg = balance_average(&model, &u, a, b).unwrap();
        let exact = (u.at(b).unwrap().ln() - u.at(a).unwrap().ln()) / (b - a);
        assert!((avg - exact).abs() < 1e-6, "[{a}, {b}]: {avg} vs {exact}");
    }
}

#[test]
fn i_beta_bounds_hold_as_inequalities() {
    let strong = holling3_strong_scenario().coefficients;
    let b = i_beta_sup(&strong.r, &strong.k, strong.beta.unwrap()).unwrap();
    assert!(b.rigorous_lower > 3.5 && b.value >= b.rigorous_lower);
    let weak = holling3_weak_scenario().coefficients;
    let b = i_beta_sup(&weak.r, &weak.k, weak.beta.unwrap()).unwrap();
    assert!(b.rigorous_lower > 560.0 && b.value >= b.rigorous_lower);
}

#[test]
fn upper_tail_decreases_with_predation_strength() {
    let s = SolverSettings::default();
    let scan = collapse_scan(
        &holling3_strong_scenario(),
        &predation_ramp(),
        &[0.0, 0.4, 0.8, 1.1],
        1000.0,
        None,
        &s,
    )
    .unwrap();
    let tails: Vec<f64> = scan.points.iter().map(|p| p.tail).collect();
    assert!(tails.windows(2).all(|w| w[1] < w[0]), "{tails:?}");
    assert!(scan.points.iter().all(|p| !p.collapsed));
}

#[test]
fn collapse_needs_a_predation_family() {
    let mut c = holling3_strong_scenario().coefficients;
    c.beta = None;
    let m = build_model(ModelKind::Multiplicative, c).unwrap();
    let p = TransitionProfile::constant(1.0);
    assert!(collapse_scan(&m, &p, &[1.0], 500.0, None, &SolverSettings::default()).is_err());
}
