use tippinglab::field::{coercivity_radius, CoefficientFn, ScalarField};
use tippinglab::hyperbolic::{continue_hyperbolic, extremal_solution, Side, SolverSettings};

/// Coefficient of determination of the least-squares line through `(x, y)`.
fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

#[test]
fn correction_is_linear_in_the_perturbation() {
    let h = ScalarField::polynomial([0.0, 1.0, 0.0, -1.0])
        .plus(&ScalarField::power(CoefficientFn::sin2(0.2, 1.0), 0));
    let rho = coercivity_radius(&h, 1.0, 1e6).unwrap() + 1.0;
    let base = extremal_solution(
        &h,
        Side::Upper,
        (0.0, 200.0),
        rho,
        &SolverSettings::default(),
    )
    .unwrap();
    let deltas: Vec<f64> = (0..10).map(|i| 1e-5 * 10f64.powf(i as f64 / 3.0)).collect();
    let norms: Vec<f64> = deltas
        .iter()
        .map(|&d| {
            let g = h.plus(&ScalarField::polynomial([d, 0.0, 0.0, 0.0]));
            continue_hyperbolic(&h, &base, &g, rho)
                .unwrap()
                .correction_norm
        })
        .collect();
    let r2 = r_squared(&deltas, &norms);
    assert!(r2 >= 0.999, "R² = {r2}");
    // Each decade, not only the largest one, follows the same slope.
    let slopes: Vec<f64> = norms.iter().zip(&deltas).map(|(n, d)| n / d).collect();
    let (lo, hi) = slopes
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
    assert!(hi / lo < 1.05, "slopes {slopes:?}");
}
