//! Acceptance suite. Each test prints one PASS/FAIL line to stderr (uncaptured)
//! and then asserts. Seeds, grids and intervals are fixed in advance.

use std::io::Write;
use std::time::Instant;

use mfbs::fit::median;
use mfbs::format::{ArrayFile, TAG_COVARIANCE};
use mfbs::gaussian::{
    covariance_b, covariance_b_quadrature, covariance_piece, delta_region_covariance, increment_bounds_report,
    lnd_certificate, lnd_sweep, superadditivity_report, LndMode, ProcessTag,
};
use mfbs::grid::{Grid, Interval};
use mfbs::hurst::{tau_and_beta, HurstFunctional, HurstSpec, Regime};
use mfbs::kernel::fbm_normalization;
use mfbs::levelset::{dimension_experiment, local_dimension_map, DimensionConfig, LocalMapConfig};
use mfbs::localtime::{
    ball_scaling_fit, mollified_local_time, moment_scaling_fit, occupation_identity_residual, KRule, LevelMode, SpatialBins, TestFunction,
    TimeSet, SPATIAL_TOL,
};
use mfbs::manifest::VerifyLemmasParams;
use mfbs::runner::{lemma_suite, run, RunOptions};
use mfbs::simulate::{empirical_covariance, CholeskySampler, NoiseConfig, SamplerConfig, WhiteNoiseSampler};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(name: &str, pass: bool, detail: String, start: Instant) {
    let line = format!("{} {name}: {detail} ({:.1} s)", if pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    let _ = writeln!(std::io::stderr(), "{line}");
    assert!(pass, "{line}");
}

fn family(toml_text: &str) -> HurstFunctional {
    let spec: HurstSpec = toml::from_str(toml_text).unwrap();
    spec.build().unwrap()
}

fn sigmoid_1d(center: f64) -> HurstFunctional {
    family(&format!("family = \"smooth-sigmoid\"\nlo = [0.3]\nhi = [0.7]\nsteepness = [4.0]\ncenter = [{center}]\naxis = [0]"))
}

fn sigmoid_2d() -> HurstFunctional {
    family("family = \"smooth-sigmoid\"\nlo = [0.3, 0.5]\nhi = [0.6, 0.8]\nsteepness = [3.0, 3.0]\ncenter = [1.25, 1.25]\naxis = [0, 1]")
}

fn affine_map() -> HurstFunctional {
    family("family = \"affine-clamped\"\nintercept = [0.4, 0.6]\nslopes = [[0.2, 0.0], [0.0, 0.0]]\nlo = 0.05\nhi = 0.95")
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, dims: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dims).map(|_| rng.random_range(lo..hi)).collect()).collect()
}

#[test]
fn covariance_matches_closed_form() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for h in [0.2, 0.5, 0.8] {
        let f = HurstFunctional::constant(&[h]).unwrap();
        let c = fbm_normalization(h).unwrap();
        for _ in 0..100 {
            let (s, t) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
            let cov = covariance_b_quadrature(&f, &[vec![s], vec![t]], 1e-12).unwrap().entries;
            let exact = |a: f64, b: f64| c * 0.5 * (a.powf(2.0 * h) + b.powf(2.0 * h) - (a - b).abs().powf(2.0 * h));
            for (i, j, a, b) in [(0, 0, s, s), (0, 1, s, t), (1, 1, t, t)] {
                worst = worst.max((cov[(i, j)] - exact(a, b)).abs() / exact(a, b).abs());
            }
        }
    }
    report("covariance_matches_closed_form", worst <= 1e-6, format!("max relative error {worst:.2e} <= 1e-6 over 300 pairs"), start);
}

#[test]
fn samplers_agree() {
    let start = Instant::now();
    let grid = Grid::uniform(&[0.5], &[2.0], &[32]).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for (name, h) in [("constant 0.5", HurstFunctional::constant(&[0.5]).unwrap()), ("sigmoid", sigmoid_1d(1.25))] {
        let chol = CholeskySampler::new(&h, &grid).unwrap();
        let cfg = NoiseConfig { window: Some(60.0), grading: Some(1.02), ..NoiseConfig::new(1.0 / 512.0) };
        let wn = WhiteNoiseSampler::new(&h, &grid, cfg).unwrap();
        let a = empirical_covariance(&chol.ensemble(1, 1, 10_000).unwrap(), 0).unwrap();
        let b = empirical_covariance(&wn.ensemble(1, 2, 10_000).unwrap(), 0).unwrap();
        let mut worst = 0.0f64;
        for i in 0..32 {
            for j in 0..32 {
                let se = (a.se[(i, j)].powi(2) + b.se[(i, j)].powi(2)).sqrt();
                worst = worst.max(((a.cov[(i, j)] - b.cov[(i, j)]).abs() - wn.discretization_bound) / se);
            }
        }
        pass &= worst <= 3.0;
        details.push(format!("{name}: worst excess {worst:.2} SE (bound {:.1e})", wn.discretization_bound));
    }
    report("samplers_agree", pass, format!("{} <= 3", details.join("; ")), start);
}

#[test]
fn decomposition_identity() {
    let start = Instant::now();
    let tol = 1e-10;
    let eps = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let families: Vec<(usize, HurstFunctional)> = vec![
        (1, HurstFunctional::constant(&[0.35]).unwrap()),
        (1, sigmoid_1d(1.25)),
        (2, HurstFunctional::constant(&[0.4, 0.7]).unwrap()),
        (2, sigmoid_2d()),
    ];
    let mut worst = 0.0f64;
    for (n, h) in &families {
        let pts = random_points(&mut rng, 50, *n, 0.5, 2.0);
        let x0 = covariance_piece(h, ProcessTag::X0, eps, &pts, tol).unwrap().entries;
        let mut sum = covariance_piece(h, ProcessTag::XEps, eps, &pts, tol).unwrap().entries;
        for l in 0..*n {
            sum += covariance_piece(h, ProcessTag::Y(l), eps, &pts, tol).unwrap().entries;
        }
        if *n >= 2 {
            sum += delta_region_covariance(h, eps, &pts, tol).unwrap().entries;
        }
        for i in 0..50 {
            for j in 0..50 {
                let allowed = 2.0 * *n as f64 * tol * x0[(i, j)].abs().max(1.0);
                worst = worst.max((x0[(i, j)] - sum[(i, j)]).abs() / allowed);
            }
        }
    }
    report("decomposition_identity", worst <= 1.0, format!("worst |X0 - pieces| is {worst:.2e} of 2N*tol, 4 families x 50 points"), start);
}

#[test]
fn conditional_variance_certificates() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let bm = HurstFunctional::constant(&[0.5]).unwrap();
    let mut markov = 0.0f64;
    for n in 2..=12 {
        let mut pts: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
        pts.sort_by(f64::total_cmp);
        let pts: Vec<Vec<f64>> = pts.into_iter().map(|x| vec![x]).collect();
        let cert = lnd_certificate(&bm, &pts, LndMode::Sectorial, 0.1, 1e-12).unwrap();
        let gap = pts[n - 1][0] - pts[n - 2][0];
        markov = markov.max((cert.cond_variance - gap).abs() / gap);
    }
    let iv = Interval::cube(2, 1.0, 2.0).unwrap();
    let sizes = [3, 5, 10, 15, 20];
    let mut spreads = Vec::new();
    let mut r_mins = Vec::new();
    for (k, h) in [HurstFunctional::constant(&[0.4, 0.7]).unwrap(), sigmoid_2d()].iter().enumerate() {
        let sweep = lnd_sweep(h, &iv, LndMode::Directional(0), 0.25, &sizes, 200, 40 + k as u64, 1e-10).unwrap();
        spreads.push(sweep.r_min_spread);
        r_mins.extend(sweep.summary.iter().map(|s| s.r_min));
    }
    let mut margin = f64::INFINITY;
    for (k, h) in [HurstFunctional::constant(&[0.4, 0.7]).unwrap(), sigmoid_2d()].iter().enumerate() {
        let pts = random_points(&mut rng, 10, 2, 1.0, 2.0);
        let rep = superadditivity_report(h, &pts, 0.25, 100, 50 + k as u64, 1e-10).unwrap();
        margin = margin.min(rep.min_margin_strips).min(rep.min_margin_liouville);
    }
    let r_min = r_mins.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = spreads.iter().cloned().fold(0.0, f64::max);
    let pass = markov <= 1e-8 && r_min > 0.0 && spread <= 4.0 && margin >= -1e-10;
    report(
        "conditional_variance_certificates",
        pass,
        format!("Brownian rel err {markov:.1e} <= 1e-8; r_min {r_min:.3} > 0 with spread {spread:.2} <= 4 over n = 3..20; superadditivity margin {margin:.1e} >= -1e-10"),
        start,
    );
}

#[test]
fn increment_band_is_stable() {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    let families = [("sigmoid", sigmoid_1d(1.5), Interval::new(vec![1.0], vec![2.0]).unwrap()), ("affine", affine_map(), Interval::new(vec![0.1, 0.55], vec![1.0, 1.0]).unwrap())];
    for (name, h, iv) in &families {
        let a = increment_bounds_report(h, iv, 500, 0.1, 505).unwrap();
        let b = increment_bounds_report(h, iv, 500, 0.05, 505).unwrap();
        let ok = |r: &mfbs::gaussian::IncrementReport| r.min_ratio > 0.0 && r.max_ratio.is_finite();
        let lo = a.min_ratio / b.min_ratio;
        let hi = a.max_ratio / b.max_ratio;
        let stable = (0.25..=4.0).contains(&lo) && (0.25..=4.0).contains(&hi);
        pass &= ok(&a) && ok(&b) && stable;
        details.push(format!("{name}: [{:.3}, {:.3}] -> [{:.3}, {:.3}]", a.min_ratio, a.max_ratio, b.min_ratio, b.max_ratio));
    }
    report("increment_band_is_stable", pass, format!("{} (halving delta, factor 4)", details.join("; ")), start);
}

#[test]
fn local_time_calibration() {
    let start = Instant::now();
    let h = HurstFunctional::constant(&[0.5]).unwrap();
    let grid = Grid::uniform(&[1.0], &[2.0], &[2048]).unwrap();
    let ens = CholeskySampler::new(&h, &grid).unwrap().ensemble(1, 7, 200).unwrap();
    let fit = ball_scaling_fit(&ens, &h, &[1.5], &LevelMode::RandomLevel, &[0.2, 0.1, 0.05, 0.025], KRule::default()).unwrap();
    let (mut worst_res, mut worst_mass) = (0.0f64, 0.0f64);
    for f in &ens {
        let k = KRule::default().resolve(f).unwrap();
        let bins = SpatialBins::covering(f, &TimeSet::All, k).unwrap();
        let est = mollified_local_time(f, &TimeSet::All, &bins, k).unwrap();
        worst_mass = worst_mass.max((est.total_mass() - est.time_measure).abs() / est.time_measure);
        let bump = TestFunction::GaussianBump { center: vec![median(&f.values).unwrap()], width: 0.5 };
        worst_res = worst_res.max(occupation_identity_residual(f, &bump, &TimeSet::All, &bins, k).unwrap().residual);
    }
    let pass = (fit.slope - 0.5).abs() <= 0.2 && worst_res <= 0.05 && worst_mass <= SPATIAL_TOL;
    report(
        "local_time_calibration",
        pass,
        format!("ball slope {:.3} in 0.5 +/- 0.2; worst occupation residual {worst_res:.2e} <= 0.05; worst mass error {worst_mass:.1e} <= {SPATIAL_TOL:e}", fit.slope),
        start,
    );
}

#[test]
fn moment_scaling_lower_bound() {
    let start = Instant::now();
    let h = HurstFunctional::constant(&[0.5]).unwrap();
    let grid = Grid::uniform(&[1.0], &[2.0], &[2048]).unwrap();
    let ens = CholeskySampler::new(&h, &grid).unwrap().ensemble(1, 8, 1000).unwrap();
    let (fit, _) = moment_scaling_fit(&ens, &h, &[0.0], &[1.0], &[0.4, 0.2, 0.1, 0.05], 2, KRule::default()).unwrap();
    report("moment_scaling_lower_bound", fit.slope >= 0.7, format!("second-moment slope {:.3} >= 0.7 (1000 paths)", fit.slope), start);
}

#[test]
fn level_set_dimension_anchor() {
    let start = Instant::now();
    let sheet = HurstFunctional::constant(&[0.5, 0.5]).unwrap();
    let grid = Grid::uniform(&[1.0, 1.0], &[2.0, 2.0], &[512, 512]).unwrap();
    let cfg = DimensionConfig {
        d: 1,
        level: vec![0.0],
        n_paths: 30,
        seed: 11,
        sampler: SamplerConfig::WhiteNoise(NoiseConfig::new(1.0 / 511.0)),
        box_sizes: None,
        c_thr: 1.0,
        threshold_halvings: 6,
    };
    let anchor = dimension_experiment(&sheet, &grid, &cfg).unwrap();
    let med = anchor.median_slope.unwrap();

    let empty_h = HurstFunctional::constant(&[0.4]).unwrap();
    let line = Grid::uniform(&[1.0], &[2.0], &[512]).unwrap();
    let cfg = DimensionConfig { d: 3, level: vec![0.0; 3], n_paths: 30, seed: 12, sampler: SamplerConfig::Cholesky, box_sizes: None, c_thr: 1.0, threshold_halvings: 8 };
    let empty = dimension_experiment(&empty_h, &line, &cfg).unwrap();
    let fractions: Vec<f64> = empty.threshold_sweep.iter().map(|(_, f)| *f).collect();
    let vanishes = empty.regime == Regime::Empty && fractions.windows(2).all(|w| w[1] <= w[0]) && *fractions.last().unwrap() == 0.0;

    let pass = (med - 1.5).abs() <= 0.15 && vanishes;
    report(
        "level_set_dimension_anchor",
        pass,
        format!(
            "median slope {med:.3} vs 1.5 +/- 0.15 ({} of 30 paths non-empty); empty regime fractions {fractions:?}",
            (anchor.nonempty_fraction * 30.0).round()
        ),
        start,
    );
}

#[test]
fn local_dimension_map_ranks() {
    let start = Instant::now();
    let exact = |h: [f64; 2]| tau_and_beta(&h, 1).unwrap().beta.unwrap();
    let endpoints_ok = (exact([0.4, 0.6]) - 1.6).abs() <= 1e-12 && (exact([0.6, 0.6]) - 1.4).abs() <= 1e-12;
    let h = affine_map();
    let grid = Grid::uniform(&[0.1, 0.55], &[1.0, 1.0], &[1024, 512]).unwrap();
    let cfg = LocalMapConfig {
        d: 1,
        window: 0.15,
        n_paths: 30,
        seed: 9,
        sampler: SamplerConfig::WhiteNoise(NoiseConfig { grading: Some(1.05), ..NoiseConfig::new(0.9 / 1023.0) }),
        box_sizes: None,
        c_thr: 1.0,
    };
    let map = local_dimension_map(&h, &grid, &cfg).unwrap();
    let mut by_t1: Vec<(f64, f64)> = map.windows.iter().map(|w| (w.center[0], w.theoretical)).collect();
    by_t1.sort_by(|a, b| a.0.total_cmp(&b.0));
    let decreasing = by_t1.windows(2).all(|w| w[1].1 <= w[0].1);
    let pass = endpoints_ok && decreasing && map.windows.len() >= 6 && map.spearman >= 0.7;
    report(
        "local_dimension_map_ranks",
        pass,
        format!("endpoints 1.6 / 1.4 exact: {endpoints_ok}; map decreasing in t1: {decreasing}; Spearman {:.3} >= 0.7 over {} windows", map.spearman, map.windows.len()),
        start,
    );
}

#[test]
fn calculus_inequalities_hold() {
    let start = Instant::now();
    let suite = lemma_suite(&VerifyLemmasParams::default(), 1010).unwrap();
    let spread = suite.bounds.iter().chain(suite.simplex.iter().map(|s| &s.bound)).map(|b| b.spread).fold(0.0, f64::max);
    report(
        "calculus_inequalities_hold",
        suite.passed(),
        format!(
            "{} bound sweeps, worst constant spread {spread:.2} < 10; {} splits with max |sum 1/p - 1| {:.1e}, max H d/p {:.4} < 1",
            suite.bounds.len() + suite.simplex.len(),
            suite.draws,
            suite.max_split_error,
            suite.max_exponent_product
        ),
        start,
    );
}

#[test]
fn exponent_formulas_agree() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let (mut draws, mut worst) = (0, 0.0f64);
    while draws < 1000 {
        let n = rng.random_range(1..=5);
        let d = rng.random_range(1..=4usize);
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..0.98)).collect();
        let rep = tau_and_beta(&h, d).unwrap();
        if rep.regime != Regime::Exists {
            continue;
        }
        worst = worst.max((rep.beta.unwrap() - rep.beta_min_formula).abs());
        draws += 1;
    }
    let anchors = [(vec![0.5, 0.5], 1, 1.5), (vec![1.0 / 3.0, 0.5], 2, 4.0 / 3.0), (vec![0.4, 0.6], 1, 1.6)];
    let anchors_ok = anchors.iter().all(|(h, d, b)| (tau_and_beta(h, *d).unwrap().beta.unwrap() - b).abs() <= 1e-12);
    report(
        "exponent_formulas_agree",
        worst <= 1e-12 && anchors_ok,
        format!("max |beta - min-formula| {worst:.1e} <= 1e-12 on 1000 draws; anchors 1.5, 4/3, 1.6 exact: {anchors_ok}"),
        start,
    );
}

#[test]
fn determinism_and_round_trip() {
    let start = Instant::now();
    let manifest = r#"
experiment = "simulate"
resolution = [16, 16]
seed = 12
d = 2
[hurst]
family = "smooth-sigmoid"
lo = [0.3, 0.5]
hi = [0.6, 0.8]
steepness = [3.0, 3.0]
center = [1.25, 1.25]
axis = [0, 1]
[interval]
lo = [1.0, 1.0]
hi = [1.5, 1.5]
[params]
replicates = 3
"#;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        run(manifest, &RunOptions { out: Some(d.path().to_path_buf()), ..Default::default() }).unwrap();
    }
    let mut identical = true;
    for r in 0..3 {
        let name = format!("fields/field_{r:04}.bin");
        identical &= std::fs::read(dirs[0].path().join(&name)).unwrap() == std::fs::read(dirs[1].path().join(&name)).unwrap();
    }
    identical &= std::fs::read(dirs[0].path().join("fields.csv")).unwrap() == std::fs::read(dirs[1].path().join("fields.csv")).unwrap();

    let field = mfbs::format::read_field(&dirs[0].path().join("fields/field_0001.bin")).unwrap();
    let copy = dirs[0].path().join("copy.bin");
    mfbs::format::write_field(&copy, &field).unwrap();
    let back = mfbs::format::read_field(&copy).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let exact = bits(&back.values) == bits(&field.values) && back.grid == field.grid && back.seed == field.seed && back.d == 2;

    let h = HurstFunctional::constant(&[0.3]).unwrap();
    let cov = covariance_b(&h, &[vec![1.0], vec![1.5], vec![2.0]], 1e-10).unwrap();
    let arr = mfbs::format::covariance_array(&cov.entries);
    let back_arr = ArrayFile::from_bytes(&arr.to_bytes().unwrap()).unwrap();
    let cov_exact = back_arr == arr && back_arr.tag == TAG_COVARIANCE;

    report(
        "determinism_and_round_trip",
        identical && exact && cov_exact,
        format!("repeat runs byte-identical: {identical}; field round trip bit-exact: {exact}; covariance array round trip: {cov_exact}"),
        start,
    );
}
