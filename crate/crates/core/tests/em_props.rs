use bergman_dpp::euler_maclaurin::{
    em_sum, gaussian_halfline_sum, gaussian_halfline_sum_with_cutoff, gaussian_moment_sum,
    gaussian_moment_sum_with_cutoff, halfline_boundary_correction, halfline_leading,
    paired_gaussian_difference, paired_gaussian_difference_with_cutoff, paired_gaussian_prediction,
    ShiftedGaussian,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn high_order_expansion_matches_brute_sum(v in -1.5..1.5f64, a in 0.5..2.0f64, p in 400.0..40_000.0f64) {
        let brute = gaussian_halfline_sum(v, a, p);
        let em = em_sum(&ShiftedGaussian::new(v, a, p), 8).unwrap();
        prop_assert!((brute - em).abs() < 1e-9 * brute.max(1.0), "{brute} vs {em}");
    }

    #[test]
    fn tail_cutoff_does_not_matter(v in -2.0..2.0f64, a in 0.3..3.0f64, p in 10.0..1e5f64, k in 0u32..4, shift in -5i64..=5) {
        let a12 = gaussian_halfline_sum_with_cutoff(v, a, p, 12.0);
        let a16 = gaussian_halfline_sum(v, a, p);
        prop_assert!((a12 - a16).abs() <= 1e-13 * a16.abs().max(1e-300));
        let m12 = gaussian_moment_sum_with_cutoff(v, a, p, k, 12.0);
        let m16 = gaussian_moment_sum(v, a, p, k);
        prop_assert!((m12 - m16).abs() <= 1e-13 * m16.abs().max(1e-300));
        let d12 = paired_gaussian_difference_with_cutoff(v, a, p, shift, 12.0);
        let d16 = paired_gaussian_difference(v, a, p, shift);
        // The difference of two sums of size ~a√p; compare on that scale.
        prop_assert!((d12 - d16).abs() <= 1e-13 * a * p.sqrt());
    }
}

#[test]
fn leading_remainder_shrinks_like_inverse_root() {
    let (v, a) = (0.5, 1.0);
    let pts: Vec<(f64, f64)> = [1e2, 1e3, 1e4, 1e5]
        .iter()
        .map(|&p: &f64| {
            let r = gaussian_halfline_sum(v, a, p) - halfline_leading(v, a, p) - halfline_boundary_correction(v);
            (p.ln(), r.abs().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
    let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
    let slope = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum::<f64>()
        / pts.iter().map(|q| (q.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
}

#[test]
fn paired_difference_error_constant_is_small() {
    let mut worst: f64 = 0.0;
    for p in [1e3, 1e4, 1e5] {
        for v in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            for k in 1..=5i64 {
                let err = (paired_gaussian_difference(v, 1.0, p, k) - paired_gaussian_prediction(v, k)).abs();
                worst = worst.max(err / (k as f64 * k as f64 / p.sqrt()));
            }
        }
    }
    assert!(worst < 3.0, "fitted constant {worst}");
}
