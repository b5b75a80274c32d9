use mbcs::interferometer::{
    count_port_samples, enumerate_port_samples, haar_random, submatrix, PortSample, SourceSet,
};
use mbcs::{PolarizationVector, SpectralProfile, UnitaryMatrix};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn sources(ports: Vec<usize>) -> SourceSet {
    let profile = SpectralProfile::new(1.0, 50.0, 0.0, PolarizationVector::e1()).unwrap();
    let n = ports.len();
    SourceSet::new(ports, vec![profile; n]).unwrap()
}

proptest! {
    #[test]
    fn permuting_sources_permutes_columns(
        m in 3usize..8,
        seed in any::<u64>(),
        order in Just(vec![0usize, 1, 2]).prop_shuffle(),
    ) {
        let u = haar_random(m, seed);
        let ports = vec![1, 2, m];
        let d = PortSample::new(vec![1, 1, m]).unwrap();
        let base = submatrix(&u, &d, &sources(ports.clone())).unwrap();
        let shuffled: Vec<usize> = order.iter().map(|&k| ports[k]).collect();
        let permuted = submatrix(&u, &d, &sources(shuffled)).unwrap();
        for (col, &k) in order.iter().enumerate() {
            prop_assert_eq!(permuted.column(col), base.column(k));
        }
    }

    #[test]
    fn unsorted_ports_canonicalize(v in prop::collection::vec(1usize..6, 1..5)) {
        let d = PortSample::from_unsorted(v.clone()).unwrap();
        let mut sorted = v;
        sorted.sort();
        prop_assert_eq!(d.ports(), &sorted[..]);
    }
}

#[test]
fn enumeration_emits_each_sample_once() {
    for m in 1..=5 {
        for n in 1..=4 {
            for bunching in [true, false] {
                if !bunching && n > m {
                    assert!(enumerate_port_samples(m, n, bunching).is_err());
                    continue;
                }
                let samples = enumerate_port_samples(m, n, bunching).unwrap();
                let set: BTreeSet<Vec<usize>> =
                    samples.iter().map(|d| d.ports().to_vec()).collect();
                assert_eq!(set.len(), samples.len());
                assert_eq!(samples.len(), count_port_samples(m, n, bunching));
                let mut brute = BTreeSet::new();
                for code in 0..m.pow(n as u32) {
                    let mut v: Vec<usize> =
                        (0..n).map(|k| code / m.pow(k as u32) % m + 1).collect();
                    v.sort();
                    if bunching || v.windows(2).all(|w| w[0] < w[1]) {
                        brute.insert(v);
                    }
                }
                assert_eq!(set, brute);
            }
        }
    }
}

#[test]
fn identity_submatrix_selects_ports() {
    let u = UnitaryMatrix::identity(4);
    let d = PortSample::new(vec![2, 4]).unwrap();
    let sub = submatrix(&u, &d, &sources(vec![4, 2])).unwrap();
    assert_eq!(sub[(0, 1)].re, 1.0);
    assert_eq!(sub[(1, 0)].re, 1.0);
    assert_eq!(sub[(0, 0)].norm(), 0.0);
}
