use tippinglab::classify::{Case, ClassifySettings};
use tippinglab::field::{ParametricFamily, ScalarField, TransitionProfile};
use tippinglab::hyperbolic::{in_Rf, SolverSettings};
use tippinglab::models::migration_scenario;
use tippinglab::tipping::{find_size_tipping, TippingOptions};

fn toy() -> ParametricFamily {
    ParametricFamily::additive(ScalarField::polynomial([0.0, 1.0, 0.0, -1.0]))
}

/// Collapses runs of equal case names.
fn case_word(cases: impl Iterator<Item = Case>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in cases {
        let n = c.name().to_string();
        if out.last() != Some(&n) {
            out.push(n);
        }
    }
    out
}

#[test]
fn size_map_is_c_b_a_b_c() {
    let p = TransitionProfile::gaussian_impulse(0.0, 1.0, 10.0);
    let o = TippingOptions {
        tol: 1e-9,
        ..Default::default()
    };
    let r = find_size_tipping(&toy(), &p, -4.0, 4.0, &o, &ClassifySettings::default()).unwrap();
    let (dm, dp) = r.size_pair.unwrap();
    assert!(dm < 0.0 && 0.0 < dp);
    assert_eq!(r.critical.len(), 2);
    // Bracket endpoints at the crossings are within the B tolerance.
    let mut cases: Vec<(f64, Case)> = r
        .samples
        .iter()
        .map(|s| (s.parameter, s.case.clone()))
        .collect();
    for c in &r.critical {
        let b = [&c.lo_label, &c.hi_label]
            .into_iter()
            .find(|l| l.case.is_b())
            .expect("B at crossing");
        cases.push((c.value, b.case.clone()));
    }
    cases.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let word = case_word(cases.into_iter().map(|c| c.1));
    let coarse: Vec<char> = word.iter().map(|w| w.chars().next().unwrap()).collect();
    assert_eq!(coarse, ['C', 'B', 'A', 'B', 'C'], "{word:?}");
}

#[test]
fn migration_family_rf_membership() {
    let fam = migration_scenario().family;
    let s = SolverSettings::default();
    for g in [2.0, 8.5] {
        assert!(in_Rf(&fam, g, &s).unwrap().member, "{g}");
    }
    for g in [1.0, 9.0] {
        assert!(!in_Rf(&fam, g, &s).unwrap().member, "{g}");
    }
}
