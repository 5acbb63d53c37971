use mfbs::gaussian::{
    cholesky_with_jitter, conditional_variance, covariance_b, covariance_piece, delta_region_covariance, increment_correlation, lnd_certificate,
    random_configuration, LagGrid, LndMode, ProcessTag,
};
use mfbs::grid::Interval;
use mfbs::hurst::HurstFunctional;
use mfbs::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn brownian_covariance_is_min() {
    let bm = HurstFunctional::constant(&[0.5]).unwrap();
    let c = covariance_b(&bm, &[vec![1.0], vec![2.0]], 1e-12).unwrap().entries;
    for (got, want) in c.iter().zip([1.0, 1.0, 1.0, 2.0]) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn brownian_conditioning_is_markov() {
    let bm = HurstFunctional::constant(&[0.5]).unwrap();
    let pts: Vec<Vec<f64>> = [0.5, 1.0, 1.7, 2.4].iter().map(|&x| vec![x]).collect();
    let c = covariance_b(&bm, &pts, 1e-12).unwrap().entries;
    let all = conditional_variance(&c, 3, &[0, 1, 2]).unwrap();
    let last = conditional_variance(&c, 3, &[2]).unwrap();
    assert!((all - last).abs() <= 1e-12 && (all - 0.7).abs() <= 1e-12);
    assert!((conditional_variance(&c, 3, &[]).unwrap() - 2.4).abs() <= 1e-12);
}

#[test]
fn liouville_pieces_of_brownian_motion() {
    let bm = HurstFunctional::constant(&[0.5]).unwrap();
    let p = [vec![1.0]];
    let var = |tag| covariance_piece(&bm, tag, 0.25, &p, 1e-12).unwrap().entries[(0, 0)];
    assert!((var(ProcessTag::X0) - 1.0).abs() < 1e-10);
    assert!((var(ProcessTag::XEps) - 0.25).abs() < 1e-10);
    assert!((var(ProcessTag::Y(0)) - 0.75).abs() < 1e-10);
    assert!(var(ProcessTag::ZEps).abs() < 1e-10);
}

#[test]
fn jitter_rescues_duplicates_and_rejects_indefinite() {
    let singular = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.5, 1.0, 1.0, 0.5, 0.5, 0.5, 1.0]);
    let f = cholesky_with_jitter(&singular).unwrap();
    assert!(f.jitter > 0.0 && f.jitter <= 1e-6);
    let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(matches!(cholesky_with_jitter(&bad), Err(Error::Conditioning(_))));
}

#[test]
fn unordered_certificate_is_rejected() {
    let h = HurstFunctional::constant(&[0.5, 0.5]).unwrap();
    let pts = vec![vec![1.5, 1.0], vec![1.2, 1.3]];
    assert!(matches!(lnd_certificate(&h, &pts, LndMode::Directional(0), 0.25, 1e-10), Err(Error::Argument(_))));
    assert!(matches!(lnd_certificate(&h, &pts, LndMode::Sectorial, 0.25, 1e-10), Err(Error::Argument(_))));
}

#[test]
fn random_configurations_respect_their_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let iv = Interval::cube(2, 0.5, 2.0).unwrap();
    for _ in 0..20 {
        let s = random_configuration(&mut rng, &iv, 6, LndMode::Sectorial);
        assert!(s[..5].iter().all(|p| p[0] <= s[5][0] && p[1] <= s[5][1]));
        let d = random_configuration(&mut rng, &iv, 6, LndMode::Directional(1));
        assert!(d.windows(2).all(|w| w[0][1] <= w[1][1]));
    }
}

#[test]
fn brownian_increments_are_uncorrelated() {
    let bm = HurstFunctional::constant(&[0.5]).unwrap();
    let lags = LagGrid { spacing: vec![0.5], half_counts: vec![2] };
    let rep = increment_correlation(&bm, &[2.0], &[0.1], &lags, 1e-12).unwrap();
    for (s, r) in rep.lags.iter().zip(&rep.correlation) {
        let want = if s[0] == 0.0 { 1.0 } else { 0.0 };
        assert!((r - want).abs() < 1e-9, "lag {s:?}: {r}");
    }
}

fn hurst2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..0.8, 2)
}

fn points2(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.6f64..2.0, 2), 2..=n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pieces_sum_to_liouville_sheet(h in hurst2(), pts in points2(6)) {
        let f = HurstFunctional::constant(&h).unwrap();
        let tol = 1e-10;
        let x0 = covariance_piece(&f, ProcessTag::X0, 0.2, &pts, tol).unwrap().entries;
        let sum = covariance_piece(&f, ProcessTag::XEps, 0.2, &pts, tol).unwrap().entries
            + covariance_piece(&f, ProcessTag::Y(0), 0.2, &pts, tol).unwrap().entries
            + covariance_piece(&f, ProcessTag::Y(1), 0.2, &pts, tol).unwrap().entries
            + delta_region_covariance(&f, 0.2, &pts, tol).unwrap().entries;
        for (a, b) in x0.iter().zip(sum.iter()) {
            prop_assert!((a - b).abs() <= 4.0 * tol * a.abs().max(1.0));
        }
    }

    #[test]
    fn conditioning_on_more_points_never_raises_variance(h in hurst2(), pts in points2(7)) {
        let f = HurstFunctional::constant(&h).unwrap();
        let target = vec![2.1, 2.1];
        let mut all = pts.clone();
        all.push(target);
        let c = covariance_b(&f, &all, 1e-12).unwrap().entries;
        let n = all.len() - 1;
        let mut prev = conditional_variance(&c, n, &[]).unwrap();
        for k in 1..=n {
            let given: Vec<usize> = (0..k).collect();
            let v = conditional_variance(&c, n, &given).unwrap();
            prop_assert!(v <= prev * (1.0 + 1e-9) + 1e-12, "{v} > {prev}");
            prop_assert!(v >= 0.0);
            prev = v;
        }
    }
}
