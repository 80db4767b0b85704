use std::f64::consts::PI;

use bergman_dpp::quadrature::circle_integrate;
use bergman_dpp::special;
use bergman_dpp::statistics::hypothesis::{mean_and_variance, variance_standard_error};
use bergman_dpp::statistics::{
    constant, droplet_integral, expectation_exact, fourier_coefficient, limit_variance, mc_run,
    registry, sample_linear_statistics, variance_exact, variance_exact_with, TestFunctionSpec,
    VarianceOptions,
};
use bergman_dpp::{Complex64, ModelGeometry, Point, RngStamp, TestFunction};
use proptest::prelude::*;

fn bump() -> TestFunction {
    TestFunctionSpec::RadialBump { a: 0.1, b: 0.45 }.build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn registry_gradients_match_finite_differences(x in -1.2..1.2f64, y in -1.2..1.2f64) {
        let h = 1e-5;
        for (_, f) in registry() {
            let g = f.gradient(Point::new(x, y));
            let gx = (f.value(Point::new(x + h, y)) - f.value(Point::new(x - h, y))) / (2.0 * h);
            let gy = (f.value(Point::new(x, y + h)) - f.value(Point::new(x, y - h))) / (2.0 * h);
            prop_assert!((g[0] - gx).abs() < 1e-5 && (g[1] - gy).abs() < 1e-5, "{}: {g:?} vs {gx} {gy}", f.name);
        }
    }

    #[test]
    fn analytic_fourier_matches_circle_rule(r in 0.05..1.5f64) {
        for (_, f) in registry() {
            let Some(coeffs) = f.circle_fourier(r) else { continue };
            for k in -6i64..=6 {
                let numeric = circle_integrate(
                    |t| Complex64::from_polar(f.value(Point::from_polar(r, 2.0 * PI * t)), 2.0 * PI * t * k as f64),
                    256,
                );
                let analytic: Complex64 = coeffs.iter().filter(|(j, _)| *j == k).map(|(_, c)| *c).sum();
                prop_assert!((numeric - analytic).norm() < 1e-10, "{} k={k}: {numeric} vs {analytic}", f.name);
            }
        }
    }

    #[test]
    fn test_functions_vanish_beyond_support(r in 0.0..5.0f64, t in 0.0..1.0f64) {
        for (_, f) in registry() {
            if r > f.support_radius {
                prop_assert_eq!(f.value(Point::from_polar(r, 2.0 * PI * t)), 0.0);
            }
        }
    }
}

#[test]
fn fourier_coefficients_are_conjugate_symmetric() {
    let plane = ModelGeometry::plane();
    let f = TestFunctionSpec::GaussianBump { cx: 0.5, cy: 0.2, width: 0.15 }.build().unwrap();
    for k in 1..6 {
        let a = fourier_coefficient(&plane, 100, &f, k);
        let b = fourier_coefficient(&plane, 100, &f, -k);
        assert!((a - b.conj()).norm() < 1e-14);
    }
    let radial = bump();
    assert!(fourier_coefficient(&plane, 100, &radial, 3).norm() < 1e-15);
}

#[test]
fn expectation_of_one_is_rank() {
    for model in [ModelGeometry::plane(), ModelGeometry::projective_line()] {
        for p in [10u32, 100] {
            let f = TestFunctionSpec::ConstantCapped { r: 1e6 }.build().unwrap();
            let e = expectation_exact(&model, p, &f);
            let n = model.dimension(p).unwrap() as f64;
            assert!((e - n).abs() < 1e-6 * n, "{:?} p={p}: {e}", model.kind());
        }
    }
}

#[test]
fn expectation_in_forbidden_region_is_small() {
    let model = ModelGeometry::plane();
    for p in [200u32, 400] {
        let r3 = ((1.0 + 3.0 / (p as f64).sqrt()) / PI).sqrt();
        let w = 0.05;
        let f = TestFunction::new(
            "outside",
            f64::INFINITY,
            0,
            move |x: Point| {
                let r = x.norm();
                if r <= r3 { 0.0 } else { 1.0 - (-((r - r3) / w).powi(2)).exp() }
            },
            move |x: Point| {
                let r = x.norm();
                if r <= r3 {
                    return [0.0, 0.0];
                }
                let d = 2.0 * (r - r3) / (w * w) * (-((r - r3) / w).powi(2)).exp() / r;
                [d * x.0.re, d * x.0.im]
            },
        );
        let e = expectation_exact(&model, p, &f);
        // Mass of the partial kernel diagonal outside radius r3: each monomial
        // section has pπ|z|² ~ Gamma(k+1).
        let outside: f64 = (0..=p).map(|k| special::gamma_q(k as f64 + 1.0, p as f64 * PI * r3 * r3)).sum();
        assert!(e >= 0.0 && e <= outside * (1.0 + 1e-6) + 1e-12, "p={p}: {e} vs {outside}");
        assert!(e < 0.01, "p={p}: {e}");
    }
}

#[test]
fn normalized_expectation_approaches_droplet_integral() {
    let model = ModelGeometry::plane();
    // Crosses the boundary so the error is not exponentially small.
    let f = TestFunctionSpec::RadialBump { a: 0.3, b: 0.8 }.build().unwrap();
    let target = droplet_integral(&model, 100, &f);
    let errs: Vec<f64> = [50u32, 100, 200, 400, 800]
        .iter()
        .map(|&p| (expectation_exact(&model, p, &f) / p as f64 - target).abs())
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
    let slope = (errs[4] / errs[0]).ln() / 16f64.ln();
    assert!(slope < -0.4, "slope {slope}, {errs:?}");
}

#[test]
fn expectation_is_rotation_covariant() {
    let f = TestFunctionSpec::GaussianBump { cx: 0.25, cy: -0.1, width: 0.1 }.build().unwrap();
    for model in [ModelGeometry::plane(), ModelGeometry::projective_line()] {
        let base = expectation_exact(&model, 60, &f);
        for t in [0.13, 0.5, 0.77] {
            let (g, m) = (f.clone(), model.clone());
            let rotated = TestFunction::new("rotated", f.support_radius, 4, move |x| g.value(m.rotate(x, t)), |_| [0.0, 0.0]);
            let e = expectation_exact(&model, 60, &rotated);
            assert!((e - base).abs() < 1e-8 * base.abs(), "{:?} t={t}: {e} vs {base}", model.kind());
        }
    }
}

#[test]
fn variance_of_constants_vanishes_and_variance_is_bounded() {
    for model in [ModelGeometry::plane(), ModelGeometry::projective_line()] {
        let p = 40;
        let n = model.dimension(p).unwrap() as f64;
        let v = variance_exact(&model, p, &constant(2.5));
        assert!(v.abs() < 1e-8 * n, "{v}");
        for (_, f) in registry() {
            let v = variance_exact(&model, p, &f);
            // sup|f| ≤ 1 for the unit-amplitude families, except angular modes
            // which reach (2·cutoff·√π)^k.
            let sup = match f.name.as_str() {
                n if n.starts_with("angular_mode(1") => 1.6 * PI.sqrt(),
                n if n.starts_with("angular_mode(2") => (1.6 * PI.sqrt()).powi(2),
                _ => 1.0,
            };
            assert!(v >= 0.0 && v <= 2.0 * sup * sup * n, "{}: {v}", f.name);
        }
    }
}

#[test]
fn splitting_radial_integrals_at_boundary_layer_is_consistent() {
    for model in [ModelGeometry::plane(), ModelGeometry::projective_line()] {
        for f in [bump(), TestFunctionSpec::AngularMode { k: 1, cutoff: 0.8 }.build().unwrap()] {
            let p = 200;
            let plain = variance_exact(&model, p, &f);
            let opts = VarianceOptions { split_level: Some((p as f64).powf(-0.45)), ..VarianceOptions::default() };
            let split = variance_exact_with(&model, p, &f, &opts);
            assert!((plain - split).abs() < 1e-6 * plain, "{:?} {}: {plain} vs {split}", model.kind(), f.name);
        }
    }
}

#[test]
fn bulk_variance_gap_shrinks() {
    let model = ModelGeometry::plane();
    let f = bump();
    let bulk = limit_variance(&model, 100, &f, 1.0);
    assert_eq!(bulk.boundary, 0.0);
    let gaps: Vec<f64> = [100u32, 200, 400]
        .iter()
        .map(|&p| (variance_exact(&model, p, &f) - bulk.bulk).abs() / bulk.bulk)
        .collect();
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
    assert!(gaps[2] <= 0.05, "{gaps:?}");
}

#[test]
fn exact_variance_agrees_with_sampled_variance() {
    let model = ModelGeometry::plane();
    let p = 50;
    let f = bump();
    let values = sample_linear_statistics(&model, p, &f, 2000, RngStamp::new(77, 3)).unwrap();
    let (mean, var) = mean_and_variance(&values);
    let se = variance_standard_error(&values);
    let exact = variance_exact(&model, p, &f);
    assert!((var - exact).abs() < 3.0 * se, "{var} ± {se} vs {exact}");
    let e = expectation_exact(&model, p, &f);
    assert!((mean - e).abs() < 4.0 * (var / 2000.0).sqrt(), "{mean} vs {e}");
}

#[test]
fn mc_run_of_constant_has_no_spread() {
    let model = ModelGeometry::plane();
    let r = mc_run(&model, 20, &constant(1.0), 10, RngStamp::new(1, 1), 1.0).unwrap();
    assert_eq!(r.mc_mean, 21.0);
    assert_eq!(r.mc_variance, 0.0);
    assert_eq!(r.ks_statistic, None);
    assert_eq!(r.ks_threshold, None);
    assert!(r.exact_variance.abs() < 1e-8);

    let r = mc_run(&model, 20, &bump(), 120, RngStamp::new(1, 2), 0.5).unwrap();
    assert!(r.mc_stderr > 0.0);
    assert!(r.ks_statistic.is_some());
    assert!((r.ks_threshold.unwrap() - 1.36 / 120f64.sqrt()).abs() < 1e-15);
    assert_eq!(r.values.len(), 120);
}

#[test]
fn double_integral_variance_agrees_with_spectral_form() {
    // Inside the droplet the kernel is local, so the direct double integral converges.
    for model in [ModelGeometry::plane(), ModelGeometry::projective_line()] {
        let p = 20;
        let f = TestFunctionSpec::GaussianBump { cx: 0.1, cy: 0.05, width: 0.12 }.build().unwrap();
        let spectral = variance_exact(&model, p, &f);
        let direct = bergman_dpp::statistics::variance_double_integral(&model, p, &f, 8.0);
        assert!((direct - spectral).abs() < 1e-3 * spectral, "{:?}: {direct} vs {spectral}", model.kind());
    }
}
