use mfbs::format::{read_field, write_field, ArrayFile};
use mfbs::gaussian::covariance_b;
use mfbs::grid::Grid;
use mfbs::hurst::HurstFunctional;
use mfbs::simulate::{replicate_seed, CholeskySampler, FieldSample, NoiseConfig, Sampler, SamplerConfig, SamplerTag, WhiteNoiseSampler};
use mfbs::Error;
use proptest::prelude::*;

#[test]
fn samples_are_reproducible_and_seed_dependent() {
    let h = HurstFunctional::constant(&[0.4, 0.6]).unwrap();
    let grid = Grid::uniform(&[1.0, 1.0], &[1.5, 1.5], &[6, 5]).unwrap();
    for cfg in [SamplerConfig::Cholesky, SamplerConfig::WhiteNoise(NoiseConfig::new(0.05))] {
        let s = Sampler::new(&h, &grid, &cfg).unwrap();
        assert_eq!(s.sample(2, 9).unwrap(), s.sample(2, 9).unwrap());
        assert_ne!(s.sample(2, 9).unwrap().values, s.sample(2, 10).unwrap().values);
        let ens = s.ensemble(2, 9, 3).unwrap();
        assert_eq!(ens[2], s.sample(2, replicate_seed(9, 2)).unwrap());
    }
}

#[test]
fn components_are_independent_streams() {
    let h = HurstFunctional::constant(&[0.5]).unwrap();
    let grid = Grid::uniform(&[1.0], &[2.0], &[8]).unwrap();
    let f = CholeskySampler::new(&h, &grid).unwrap().sample(3, 4).unwrap();
    assert_ne!(f.component(0), f.component(1));
    assert_ne!(f.component(1), f.component(2));
}

#[test]
fn white_noise_variance_is_within_its_residual() {
    let h = HurstFunctional::constant(&[0.7]).unwrap();
    let grid = Grid::uniform(&[1.0], &[2.0], &[5]).unwrap();
    let wn = WhiteNoiseSampler::new(&h, &grid, NoiseConfig { window: Some(40.0), grading: Some(1.05), ..NoiseConfig::new(1.0 / 256.0) }).unwrap();
    let exact = covariance_b(&h, &grid.points(), 1e-12).unwrap().entries;
    for (i, r) in wn.residual_variance.iter().enumerate() {
        assert!(*r >= -1e-12 && *r <= exact[(i, i)], "{r}");
    }
    assert!(wn.discretization_bound < 0.05 * exact[(0, 0)]);
}

#[test]
fn short_window_fails_the_tail_check() {
    let h = HurstFunctional::constant(&[0.8]).unwrap();
    let grid = Grid::uniform(&[1.0], &[2.0], &[4]).unwrap();
    let cfg = NoiseConfig { window: Some(3.0), ..NoiseConfig::new(0.01) };
    assert!(matches!(WhiteNoiseSampler::new(&h, &grid, cfg), Err(Error::Configuration(_))));
}

#[test]
fn cholesky_cap_is_enforced() {
    let h = HurstFunctional::constant(&[0.5, 0.5]).unwrap();
    let grid = Grid::uniform(&[1.0, 1.0], &[2.0, 2.0], &[10, 10]).unwrap();
    assert!(matches!(CholeskySampler::with_cap(&h, &grid, 50, 1e-10), Err(Error::Size(_))));
}

fn field() -> impl Strategy<Value = FieldSample> {
    (prop::collection::vec(2usize..6, 1..4), 1usize..3, any::<u64>(), any::<bool>()).prop_flat_map(|(counts, d, seed, wn)| {
        let n = counts.iter().product::<usize>() * d;
        (Just(counts), Just(d), Just(seed), Just(wn), prop::collection::vec(any::<f64>(), n))
    })
    .prop_map(|(counts, d, seed, wn, values)| {
        let k = counts.len();
        let grid = Grid::uniform(&vec![0.5; k], &vec![2.5; k], &counts).unwrap();
        let sampler = if wn { SamplerTag::WhiteNoise } else { SamplerTag::Cholesky };
        FieldSample { grid, d, values, seed, sampler, noise: None }
    })
}

proptest! {
    #[test]
    fn binary_files_round_trip_bit_exactly(f in field()) {
        let a = ArrayFile::from(&f);
        let back = ArrayFile::from_bytes(&a.to_bytes().unwrap()).unwrap();
        prop_assert_eq!(back.to_bytes().unwrap(), a.to_bytes().unwrap());
        let g = FieldSample::try_from(back).unwrap();
        prop_assert_eq!(g.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), f.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(&g.grid, &f.grid);
        prop_assert_eq!((g.d, g.seed, g.sampler), (f.d, f.seed, f.sampler));
    }

    #[test]
    fn any_truncation_is_a_format_error(f in field(), cut in 1usize..64) {
        let bytes = ArrayFile::from(&f).to_bytes().unwrap();
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(matches!(ArrayFile::from_bytes(&bytes[..keep]), Err(Error::Format(_))));
    }
}

#[test]
fn files_round_trip_through_disk() {
    let h = HurstFunctional::constant(&[0.3]).unwrap();
    let grid = Grid::uniform(&[1.0], &[2.0], &[16]).unwrap();
    let f = CholeskySampler::new(&h, &grid).unwrap().sample(2, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.bin");
    write_field(&p, &f).unwrap();
    let g = read_field(&p).unwrap();
    assert_eq!(g.values, f.values);
    assert_eq!(g.seed, f.seed);
}
