mod common;

use common::*;
use mbcs::averaged::{
    output_distribution, p_av, p_av_contributions, p_av_distinguishable, p_av_identical,
    p_av_numeric_in_basis, DistributionMode,
};
use mbcs::interferometer::{beam_splitter_50_50, haar_random, PortSample, SourceSet};
use mbcs::quadrature::QuadratureSpec;
use mbcs::spectra::distinguishability_g;
use mbcs::{PolarizationVector, SpectralProfile};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sources(m: usize, n: usize, rng: &mut ChaCha8Rng) -> SourceSet {
    let mut ports: Vec<usize> = (1..=m).collect();
    ports.shuffle(rng);
    ports.truncate(n);
    SourceSet::new(ports, (0..n).map(|_| random_profile(rng)).collect()).unwrap()
}

fn photon(w0: f64, t0: f64) -> SpectralProfile {
    SpectralProfile::new(1.0, w0, t0, PolarizationVector::e1()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_mode_is_normalized(seed in any::<u64>(), m in 2usize..=6, n in 1usize..=3) {
        prop_assume!(n <= m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = haar_random(m, seed);
        let s = random_sources(m, n, &mut rng);
        for mode in [DistributionMode::General, DistributionMode::Identical, DistributionMode::Distinguishable] {
            let dist = output_distribution(&u, &s, mode).unwrap();
            prop_assert!((dist.total() - 1.0).abs() <= 1e-9);
            prop_assert!(dist.entries().iter().all(|(_, p)| *p >= 0.0 && *p <= 1.0 + 1e-9));
        }
    }

    #[test]
    fn residues_are_small_and_pair_up(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(n.max(2)..=6);
        let u = haar_random(m, seed);
        let s = random_sources(m, n, &mut rng);
        let d = PortSample::from_unsorted((0..n).map(|_| rng.random_range(1..=m)).collect()).unwrap();
        let terms = p_av_contributions(&u, &d, &s).unwrap();
        let total: num_complex::Complex64 = terms.iter().map(|t| t.1).sum();
        prop_assert!(total.im.abs() / d.bunching_factor() <= 1e-10);
        let size = terms.iter().map(|t| t.1.norm()).fold(0.0, f64::max).max(1e-300);
        for (rho, term) in &terms {
            let inverse = rho.inverse();
            let partner = terms.iter().find(|t| t.0 == inverse).unwrap().1;
            prop_assert!((partner - term.conj()).norm() <= 1e-12 * size);
            prop_assert!((term + partner).im.abs() <= 1e-12 * size);
        }
    }
}

#[test]
fn separation_sweep_interpolates_between_limits() {
    let u = haar_random(4, 31);
    for ports in [[1, 3], [2, 2], [3, 4]] {
        let d = PortSample::new(ports.to_vec()).unwrap();
        let at = |t0: f64| {
            SourceSet::new(vec![1, 2], vec![photon(50.0, 0.0), photon(50.0, t0)]).unwrap()
        };
        let identical = p_av_identical(&u, &d, &at(0.0)).unwrap();
        let distinguishable = p_av_distinguishable(&u, &d, &at(0.0)).unwrap();
        let sweep: Vec<(f64, f64)> = (0..50)
            .map(|k| {
                let s = at(20.0 * k as f64 / 49.0);
                let g = distinguishability_g(&s.profiles()[0], &s.profiles()[1]).norm_sqr();
                (g, p_av(&u, &d, &s).unwrap())
            })
            .collect();
        assert!((sweep[0].1 - identical).abs() <= 1e-8);
        assert!((sweep[49].1 - distinguishable).abs() <= 1e-8);
        for (g2, p) in &sweep {
            let expected = distinguishable + g2 * (identical - distinguishable);
            assert!((p - expected).abs() <= 1e-12);
        }
        for w in sweep.windows(2) {
            let step = (w[1].1 - w[0].1).abs();
            assert!(step <= (w[1].0 - w[0].0).abs() * (identical - distinguishable).abs() + 1e-12);
        }
    }
}

#[test]
fn color_offset_decay_of_the_dip() {
    let bs = beam_splitter_50_50();
    let d = PortSample::new(vec![1, 2]).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let offset = 6.0 * k as f64 / 19.0;
        let s = SourceSet::new(
            vec![1, 2],
            vec![photon(50.0, 0.0), photon(50.0 + offset, 0.0)],
        )
        .unwrap();
        let p = p_av(&bs, &d, &s).unwrap();
        let fitted = (1.0 - 2.0 * p).max(0.0).sqrt();
        let predicted = (-offset * offset / 8.0).exp();
        worst = worst.max((fitted - predicted).abs());
    }
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn polarization_basis_does_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let spec = QuadratureSpec::default();
    for trial in 0..4 {
        let u = haar_random(3, 90 + trial);
        let s = random_sources(3, 2, &mut rng);
        let d = PortSample::from_unsorted(vec![rng.random_range(1..=3), rng.random_range(1..=3)])
            .unwrap();
        let analytic = p_av(&u, &d, &s).unwrap();
        let mut values = Vec::new();
        for _ in 0..2 {
            let v = random_polarization(&mut rng).components();
            let w = PolarizationVector::new(-v[1].conj(), v[0].conj()).unwrap();
            let basis = [PolarizationVector::new(v[0], v[1]).unwrap(), w];
            values.push(p_av_numeric_in_basis(&u, &d, &s, &spec, basis).unwrap());
        }
        assert!((values[0] - values[1]).abs() <= 1e-9);
        assert!((values[0] - analytic).abs() <= 1e-6);
    }
}

#[test]
fn three_photon_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let u = haar_random(3, 5);
    let s = random_sources(3, 3, &mut rng);
    let spec = QuadratureSpec {
        nodes: 48,
        ..QuadratureSpec::default()
    };
    let basis = [PolarizationVector::e1(), PolarizationVector::e2()];
    for ports in [[1, 2, 3], [1, 1, 2], [3, 3, 3]] {
        let d = PortSample::new(ports.to_vec()).unwrap();
        let numeric = p_av_numeric_in_basis(&u, &d, &s, &spec, basis).unwrap();
        assert!((numeric - p_av(&u, &d, &s).unwrap()).abs() <= 1e-6);
    }
}
