use mfbs::kernel::{
    cross_integral_1d, fbm_normalization, tail_bound, verify_double_integral_bound, verify_ordered_simplex_bound,
    verify_two_scale_bound, KernelSpec, PowerCase, Region1D,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

fn ma(t: f64, h: f64) -> KernelSpec {
    KernelSpec::moving_average(t, h)
}

fn mvn_constant(h: f64) -> f64 {
    gamma(h + 0.5).powi(2) / (gamma(2.0 * h + 1.0) * (std::f64::consts::PI * h).sin())
}

#[test]
fn normalization_matches_gamma_closed_form() {
    for &h in &[0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.9] {
        let c = fbm_normalization(h).unwrap();
        assert!((c / mvn_constant(h) - 1.0).abs() < 1e-9, "h={h}: {c} vs {}", mvn_constant(h));
    }
}

#[test]
fn full_line_covariance_has_fbm_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &h in &[0.2, 0.5, 0.8] {
        let c = fbm_normalization(h).unwrap();
        for _ in 0..100 {
            let s: f64 = rng.random_range(0.5..2.0);
            let t: f64 = rng.random_range(0.5..2.0);
            let q = cross_integral_1d(&ma(s, h), &ma(t, h), Region1D::FullLine, 1e-11).unwrap();
            let shape = 0.5 * c * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h));
            assert!((q.value / shape - 1.0).abs() < 1e-6, "h={h} s={s} t={t}");
        }
    }
}

#[test]
fn mixed_exponents_and_regions() {
    // Liouville on [0, min] equals the closed form ∫_0^m (a−u)^e (b−u)^f du for a = b.
    let l = KernelSpec::liouville(1.5, 0.3);
    let r = cross_integral_1d(&l, &l, Region1D::Interval { lo: 0.0, hi: 1.5 }, 1e-12).unwrap();
    assert!((r.value - 1.5f64.powf(0.6) / 0.6).abs() < 1e-10);
    // the piece (eps, t] of a Liouville variance
    let r = cross_integral_1d(&l, &l, Region1D::Interval { lo: 0.25, hi: 1.5 }, 1e-12).unwrap();
    assert!((r.value - 1.25f64.powf(0.6) / 0.6).abs() < 1e-10);
}

#[test]
fn tail_doubling_changes_less_than_bound() {
    for &(ha, hb) in &[(0.2, 0.3), (0.7, 0.8), (0.45, 0.9)] {
        let (a, b) = (ma(1.0, ha), ma(1.7, hb));
        let tol = 1e-6;
        let full = cross_integral_1d(&a, &b, Region1D::FullLine, tol).unwrap();
        let w = (2.0 * tail_bound(&a, &b, 1.0) / (0.1 * tol)).powf(1.0 / (1.0 - (ha + hb - 1.0)));
        let doubled = cross_integral_1d(&a, &b, Region1D::Interval { lo: -2.0 * w, hi: 2.0 }, 1e-9).unwrap();
        assert!((full.value - doubled.value).abs() <= full.truncation_bound + full.abs_error_estimate + 1e-9);
        assert!(full.truncation_bound <= 0.1 * tol * 1.000001);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_in_arguments(ta in 0.3f64..3.0, tb in 0.3f64..3.0, ha in 0.1f64..0.9, hb in 0.1f64..0.9) {
        let tol = 1e-9;
        let x = cross_integral_1d(&ma(ta, ha), &ma(tb, hb), Region1D::FullLine, tol).unwrap();
        let y = cross_integral_1d(&ma(tb, hb), &ma(ta, ha), Region1D::FullLine, tol).unwrap();
        prop_assert!((x.value - y.value).abs() <= 2.0 * tol);
    }

    #[test]
    fn additive_under_region_splitting(t in 0.5f64..2.0, s in 0.5f64..2.0, h in 0.1f64..0.9, cut in 0.05f64..0.95) {
        let tol = 1e-9;
        let (a, b) = (ma(t, h), ma(s, h));
        let m = t.min(s);
        let whole = cross_integral_1d(&a, &b, Region1D::Interval { lo: -3.0, hi: m }, tol).unwrap();
        let x = -3.0 + cut * (m + 3.0);
        let left = cross_integral_1d(&a, &b, Region1D::Interval { lo: -3.0, hi: x }, tol).unwrap();
        let right = cross_integral_1d(&a, &b, Region1D::Interval { lo: x, hi: m }, tol).unwrap();
        prop_assert!((whole.value - left.value - right.value).abs() <= 3.0 * tol);
    }
}

#[test]
fn double_integral_bound_sweep() {
    let r = verify_double_integral_bound(0.25, 0.6, 2.0, &[1e-2, 1e-3, 1e-4], 0.1, 1e-10).unwrap();
    assert!(r.passed, "{r:?}");
    let big = verify_double_integral_bound(0.25, 0.6, 2.0, &[1.0, 3.0], 0.1, 1e-10).unwrap();
    assert!(big.notes.is_empty());
}

#[test]
fn two_scale_bound_cases() {
    let a = [1e-2, 1e-3, 1e-4, 1e-5];
    let (case, r) = verify_two_scale_bound(1.0, 2.0, 1.0, &a, &[1.0], 1e-10).unwrap();
    assert_eq!(case, PowerCase::Steep);
    assert!(r.passed, "{r:?}");
    let (case, r) = verify_two_scale_bound(0.5, 2.0, 1.0, &a, &[1.0], 1e-10).unwrap();
    assert_eq!(case, PowerCase::Critical);
    assert!(r.passed, "{r:?}");
    let (case, r) = verify_two_scale_bound(0.5, 1.0, 0.2, &a, &[0.1, 1.0], 1e-10).unwrap();
    assert_eq!(case, PowerCase::Shallow);
    assert!(r.passed, "{r:?}");
    assert!(verify_two_scale_bound(0.5, 1.0, 0.5, &a, &[1.0], 1e-10).is_err());
}

#[test]
fn simplex_exponents() {
    let one = verify_ordered_simplex_bound(1.0, 0.25, &[0.5], 0.5, 1e-10).unwrap();
    assert!(one.bound.passed);
    assert!((one.fitted_exponent - 1.0).abs() < 0.1);
    let two = verify_ordered_simplex_bound(1.0, 0.2, &[0.5, 0.5], 0.5, 1e-8).unwrap();
    assert!(two.bound.passed, "{two:?}");
    assert!((two.fitted_exponent - 1.5).abs() < 0.1, "{}", two.fitted_exponent);
    let three = verify_ordered_simplex_bound(1.0, 0.2, &[0.3, 0.6, 0.4], 0.2, 1e-6).unwrap();
    assert!(three.bound.passed, "{three:?}");
}
