mod common;

use common::*;
use finsler_core::geodesics::integrate_geodesic;
use finsler_core::linalg::mean_std;
use finsler_core::metrics::Chart;
use finsler_core::verify::*;
use finsler_core::{FinslerError, MetricSpec, PointTangent, Stencil};
use rand::seq::SliceRandom;

fn pt(x: &[f64], y: &[f64]) -> PointTangent {
    PointTangent::new(x.to_vec(), y.to_vec())
}

#[test]
fn gaussian_soliton_is_asymmetric_essential() {
    for n in [2, 3] {
        let g = MetricSpec::gaussian_soliton(n);
        let s = sample_set(&g, 100, 2, 0.5, 11);
        let r = soliton_residual(&g, SolitonKind::AsymmetricEssential, SigmaMode::ConstantHalf, &s, 1e-5)
            .unwrap();
        assert_eq!(r.samples, 200);
        assert!(r.verdict.passed(), "{}", r.max_residual);
    }
}

#[test]
fn flat_space_is_not_a_soliton() {
    let e = MetricSpec::euclidean(2);
    let s = sample_set(&e, 10, 1, 0.5, 3);
    let r = soliton_residual(&e, SolitonKind::InftyEinstein, SigmaMode::ConstantHalf, &s, 1e-5).unwrap();
    assert!(!r.verdict.passed());
    assert!((r.max_residual - 0.5).abs() < 1e-9);
    assert!((r.mean_residual - 0.5).abs() < 1e-9);
}

#[test]
fn sphere_sigma_fit_is_constant() {
    for n in [2, 3] {
        let s = MetricSpec::sphere(n, 1.0);
        let smp = sample_set(&s, 6, 3, 0.5, 5);
        let r = soliton_residual(&s, SolitonKind::InftyEinstein, SigmaMode::FunctionOnM, &smp, 1e-5).unwrap();
        assert!(r.verdict.passed(), "{}", r.max_residual);
        assert_eq!(r.sigma.len(), 6);
        let (mean, sd) = mean_std(&r.sigma);
        assert!((mean - (n as f64 - 1.0)).abs() < 1e-5, "{mean}");
        assert!(sd / mean <= 1e-4);
        // Every Einstein kind holds with the same factor.
        for kind in [SolitonKind::Asymmetric, SolitonKind::Essential, SolitonKind::AsymmetricEssential] {
            let r = soliton_residual(&s, kind, SigmaMode::FunctionOnSM, &smp, 1e-5).unwrap();
            assert!(r.verdict.passed(), "{kind:?} {}", r.max_residual);
        }
    }
}

#[test]
fn residuals_ignore_sample_order() {
    let r2 = randers2();
    let mut s = sample_set(&r2, 12, 1, 0.5, 9);
    let a = soliton_residual(&r2, SolitonKind::Symmetric, SigmaMode::FunctionOnSM, &s, 1e-5).unwrap();
    s.shuffle(&mut finsler_core::sampling::rng(4));
    let b = soliton_residual(&r2, SolitonKind::Symmetric, SigmaMode::FunctionOnSM, &s, 1e-5).unwrap();
    assert!((a.max_residual - b.max_residual).abs() <= 1e-12);
    assert!((a.mean_residual - b.mean_residual).abs() <= 1e-12);
}

#[test]
fn km_vanishes_without_cartan_or_curvature() {
    let p = pt(&[0.3, -0.2], &[0.6, 0.8]);
    for m in [MetricSpec::sphere(2, 1.0), MetricSpec::hyperbolic(2), mink2()] {
        let k = km_term(&m, &p).unwrap();
        assert!(max_abs(&k.k) < 1e-12, "{:?}", k);
        assert!(k.k0.abs() < 1e-12);
    }
}

#[test]
fn km_on_funk_matches_one_sided_recomputation() {
    let f = MetricSpec::funk(2);
    let mut rng = finsler_core::sampling::rng(21);
    for _ in 0..20 {
        let p = random_point(&mut rng, &f, 0.5);
        let central = km_term(&f, &p).unwrap();
        let h = p.x.iter().fold(0.0f64, |m, v| m.max(finsler_core::fd::step_for(*v)));
        let forward = km_term_with(&f, &p, 0.5 * h, Stencil::Forward).unwrap();
        for (a, b) in central.k.iter().zip(&forward.k) {
            assert!((a - b).abs() <= 5e-4, "{a} vs {b}");
        }
        let k0: f64 = central.k.iter().zip(&p.y).map(|(a, b)| a * b).sum();
        assert!((k0 - central.k0).abs() < 1e-14);
    }
}

#[test]
fn key_formula_on_solitons() {
    let g = MetricSpec::gaussian_soliton(2);
    let mut rng = finsler_core::sampling::rng(8);
    for _ in 0..5 {
        let p = random_point(&mut rng, &g, 0.3);
        let r = key_formula_residual(&g, &p).unwrap();
        assert!(max_abs(&r) <= 1e-4, "{r:?}");
    }
    // Sphere rescaled so that Ric = g/2.
    let n = 2;
    let radius = (2.0 * (n as f64 - 1.0)).sqrt();
    let s = MetricSpec::sphere(n, radius);
    let r = key_formula_residual(&s, &pt(&[0.4, 0.1], &[0.2, 1.0])).unwrap();
    assert!(max_abs(&r) <= 1e-4, "{r:?}");
}

#[test]
fn key_formula_refuses_non_solitons() {
    let e = MetricSpec::euclidean(2);
    assert!(matches!(
        key_formula_residual(&e, &pt(&[0.1, 0.2], &[1.0, 0.0])),
        Err(FinslerError::HypothesisNotMet(_))
    ));
}

#[test]
fn hamilton_quantity_is_constant_on_gaussian() {
    let g = MetricSpec::gaussian_soliton(2);
    let path = integrate_geodesic(&g, &pt(&[0.5, -1.0], &[0.3, 1.0]), 4.0, 1e-9).unwrap();
    let phi = hamilton_quantity(&g, &path).unwrap();
    assert_eq!(phi.len(), path.len());
    assert!(mean_std(&phi).1 <= 1e-4);
}

#[test]
fn identities_are_trivial_on_riemannian_metrics() {
    for m in [MetricSpec::sphere(3, 1.0), MetricSpec::hyperbolic(3)] {
        let s = sample_set(&m, 5, 1, 0.5, 2);
        for r in identity_suite(&m, &s).unwrap() {
            assert!(r.max_residual <= 1e-7, "{} {}", r.definition, r.max_residual);
        }
    }
}

#[test]
fn identities_hold_on_randers_and_funk() {
    for m in [randers3(), MetricSpec::funk(3)] {
        let s = sample_set(&m, 8, 1, 0.5, 17);
        let reports = identity_suite(&m, &s).unwrap();
        let names: Vec<&str> = reports.iter().map(|r| r.definition.as_str()).collect();
        assert_eq!(
            names,
            ["p-trace", "tau-commutation", "bar-r-antisymmetry", "bianchi-trace", "bianchi"]
        );
        for r in reports {
            assert!(r.max_residual <= 1e-4, "{} {}", r.definition, r.max_residual);
            assert!(r.verdict.passed());
        }
    }
}

#[test]
fn second_variation_on_sphere() {
    let s = MetricSpec::sphere(2, 1.0);
    let path = integrate_geodesic(&s, &pt(&[0.1, 0.0], &[0.0, 1.0]), 2.0, 1e-9).unwrap();
    let sine = second_variation_check(&s, &path, Profile::SinBump).unwrap();
    // Ric = 1: int_0^2 sin^2(pi t / 2) dt = 1, (n - 1) pi^2 / 4 on the right.
    assert!((sine.left - 1.0).abs() < 1e-6, "{}", sine.left);
    assert!((sine.right - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-12);
    assert!(sine.margin >= -1e-6 && sine.verdict.passed());
    let ramp = second_variation_check(&s, &path, Profile::Piecewise).unwrap();
    assert!((ramp.left - 2.0 / 3.0).abs() < 1e-3);
    assert!(ramp.verdict.passed());
}

#[test]
fn second_variation_trivial_cases() {
    let e = MetricSpec::euclidean(2);
    let path = integrate_geodesic(&e, &pt(&[0.0, 0.0], &[1.0, 1.0]), 3.0, 1e-9).unwrap();
    let r = second_variation_check(&e, &path, Profile::Piecewise).unwrap();
    assert!(r.left.abs() < 1e-12 && r.right == 2.0 && r.verdict.passed());
    let f = MetricSpec::funk(2);
    let path = integrate_geodesic(&f, &pt(&[0.0, 0.0], &[1.0, 0.0]), 1.5, 1e-9).unwrap();
    let r = second_variation_check(&f, &path, Profile::SinBump).unwrap();
    assert!(r.left < 0.0 && r.margin > 0.0);
}

#[test]
fn second_variation_rejects_long_sphere_arcs() {
    // A great circle at angle 0.5 from the chart origin stays inside
    // |x| <= tan(pi/2 - 0.25), so the complementary arc is in the chart too.
    let s = MetricSpec::sphere(2, 1.0).with_chart(Chart::ball(5.0));
    let x0 = 0.25f64.tan();
    let path = integrate_geodesic(&s, &pt(&[x0, 0.0], &[0.0, 1.0]), 3.3, 1e-9).unwrap();
    assert!(path.left_chart.is_none());
    assert!(matches!(
        second_variation_check(&s, &path, Profile::SinBump),
        Err(FinslerError::PathNotMinimal { .. })
    ));
}

#[test]
fn growth_bounds_on_gaussian() {
    let g = MetricSpec::gaussian_soliton(2);
    let t = theorem_1_1_check(&g, &[0.0, 0.0], 16, 6.0).unwrap();
    assert_eq!(t.rows.len(), 16);
    assert!(t.constants["K0"].abs() <= 1e-4);
    assert!(t.constants["K0_prime"].abs() <= 1e-4);
    assert!(t.constants["driving_residual"] <= 1e-5);
    assert!(t.verdict.passed());
    for row in &t.rows {
        for (d, s) in row.d.iter().zip(&row.s) {
            assert!((s - 0.5 * d).abs() < 1e-9);
        }
    }
}

#[test]
fn growth_bounds_need_the_hypothesis() {
    let e = MetricSpec::euclidean(2);
    assert!(matches!(
        theorem_1_1_check(&e, &[0.0, 0.0], 4, 2.0),
        Err(FinslerError::HypothesisNotMet(_))
    ));
    assert!(matches!(
        theorem_7_checks(&e, &[0.0, 0.0], 4, 2.0, 1.0),
        Err(FinslerError::HypothesisNotMet(_))
    ));
}

#[test]
fn linear_growth_sandwich_on_gaussian() {
    let g = MetricSpec::gaussian_soliton(2);
    let t = theorem_7_checks(&g, &[0.0, 0.0], 16, 6.0, 0.0).unwrap();
    assert!(t.verdict.passed(), "{:?}", t.margins);
    assert!(t.constants["K5"] <= 1e-3);
    assert!(t.constants["K6"].abs() <= 1e-3);
    for key in ["tau_upper", "s_abs_upper", "r_upper", "tau_lower"] {
        assert!(t.margins[key] >= -MARGIN_SLACK, "{key}");
    }
    // R = 0 cannot dominate a quadratic; reported, not counted.
    assert!(t.margins["r_lower"] < 0.0);
    assert_eq!(t.informational, ["r_lower"]);
    for row in &t.rows {
        let bound = row.bound_s.as_ref().unwrap();
        for ((d, s), b) in row.d.iter().zip(&row.s).zip(bound) {
            assert!((s - 0.5 * d).abs() < 1e-9 && s.abs() <= *b);
        }
    }
}

#[test]
fn berwald_scalar_curvature() {
    let e = MetricSpec::euclidean(2);
    let b = berwald_scalar_check(&e, &fan(&e, &[0.0, 0.0], 6, 2.0).unwrap()).unwrap();
    assert!(b.verdict.passed() && b.constants["sup_abs_r"] < 1e-12);
    let m = mink2();
    let b = berwald_scalar_check(&m, &fan(&m, &[0.0, 0.0], 6, 2.0).unwrap()).unwrap();
    assert!(b.verdict.passed());
    assert!(b.constants["sup_abs_r"] < 1e-9 && b.constants["max_abs_s"] < 1e-6);
    let s = MetricSpec::sphere(2, 1.0);
    let b = berwald_scalar_check(&s, &fan(&s, &[0.1, 0.2], 10, 3.0).unwrap()).unwrap();
    assert!(b.verdict.passed());
    assert!((b.constants["sup_abs_r"] - 2.0).abs() < 1e-5);
    for row in &b.rows {
        assert!(row.scalar_r.iter().all(|r| (r - 2.0).abs() < 1e-5));
    }
    let f = MetricSpec::funk(2);
    assert!(matches!(
        berwald_scalar_check(&f, &[]),
        Err(FinslerError::NotBerwald)
    ));
}

#[test]
fn landsberg_equivalence() {
    for m in [MetricSpec::sphere(2, 1.0), mink2()] {
        let s = sample_set(&m, 5, 2, 0.5, 6);
        let r = landsberg_equivalence_check(&m, &s, 1e-6).unwrap();
        assert!(r.verdict.passed(), "{}", r.max_residual);
    }
    let f = MetricSpec::funk(2);
    assert!(matches!(
        landsberg_equivalence_check(&f, &sample_set(&f, 3, 1, 0.5, 6), 1e-6),
        Err(FinslerError::NotLandsberg { .. })
    ));
}
