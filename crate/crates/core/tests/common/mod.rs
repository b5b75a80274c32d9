//! Reference implementations shared by the integration tests. They follow the
//! defining formulas directly and share no code with the library internals.

#![allow(dead_code)]

use mbcs::{PolarizationVector, SourceSet, SpectralProfile, UnitaryMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Permanent by Laplace expansion along the first row.
pub fn laplace_permanent(a: &CMat) -> Complex64 {
    let n = a.nrows();
    if n == 1 {
        return a[(0, 0)];
    }
    (0..n)
        .map(|j| a[(0, j)] * laplace_permanent(&a.clone().remove_row(0).remove_column(j)))
        .sum()
}

pub fn random_complex_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

pub fn random_polarization(rng: &mut ChaCha8Rng) -> PolarizationVector {
    let v: Vec<f64> = (0..4).map(|_| StandardNormal.sample(rng)).collect();
    PolarizationVector::normalized(c(v[0], v[1]), c(v[2], v[3])).unwrap()
}

/// Bandwidth in [0.7, 1.3], color 50 ± 2, emission time in [-1, 1], random polarization.
pub fn random_profile(rng: &mut ChaCha8Rng) -> SpectralProfile {
    SpectralProfile::new(
        rng.random_range(0.7..1.3),
        rng.random_range(48.0..52.0),
        rng.random_range(-1.0..1.0),
        random_polarization(rng),
    )
    .unwrap()
}

/// Temporal amplitude written out from the Gaussian spectrum.
pub fn chi(p: &SpectralProfile, t: f64, delta_t: f64) -> [Complex64; 2] {
    let dw = p.bandwidth();
    let tau = t - p.emission_time() - delta_t;
    let norm = (2.0 * dw * dw / std::f64::consts::PI).powf(0.25);
    let scalar = norm
        * (-dw * dw * tau * tau).exp()
        * Complex64::from_polar(1.0, -p.central_frequency() * tau);
    let v = p.polarization().components();
    [v[0] * scalar, v[1] * scalar]
}

/// `Σ_k v_k* w_k`.
pub fn dot(v: &[Complex64; 2], w: &[Complex64; 2]) -> Complex64 {
    v[0].conj() * w[0] + v[1].conj() * w[1]
}

/// Trapezoid rule on a uniform grid; spectrally accurate for Gaussian integrands.
pub fn trapezoid(a: f64, b: f64, steps: usize, f: impl Fn(f64) -> Complex64) -> Complex64 {
    let h = (b - a) / steps as f64;
    let inner: Complex64 = (1..steps).map(|k| f(a + k as f64 * h)).sum();
    h * (inner + 0.5 * (f(a) + f(b)))
}

fn window(p: &SpectralProfile, q: &SpectralProfile) -> (f64, f64) {
    let sigma = 0.5 / p.bandwidth().min(q.bandwidth());
    let lo = p.emission_time().min(q.emission_time()) - 12.0 * sigma;
    let hi = p.emission_time().max(q.emission_time()) + 12.0 * sigma;
    (lo, hi)
}

/// `|⟨v|v'⟩| ∫ |χ||χ'| dt` by quadrature.
pub fn reference_a(p: &SpectralProfile, q: &SpectralProfile) -> f64 {
    let (lo, hi) = window(p, q);
    let e1 = [c(1.0, 0.0), c(0.0, 0.0)];
    let pol = p.polarization().inner(&q.polarization()).norm();
    let integral = trapezoid(lo, hi, 40_000, |t| {
        let x = chi(&(*p).with_polarization(PolarizationVector::e1()), t, 0.0);
        let y = chi(&(*q).with_polarization(PolarizationVector::e1()), t, 0.0);
        c(dot(&e1, &x).norm() * dot(&e1, &y).norm(), 0.0)
    });
    pol * integral.re
}

/// `∫ χ† χ' dt` by quadrature.
pub fn reference_g(p: &SpectralProfile, q: &SpectralProfile) -> Complex64 {
    let (lo, hi) = window(p, q);
    trapezoid(lo, hi, 40_000, |t| dot(&chi(p, t, 0.0), &chi(q, t, 0.0)))
}

/// Rate as the explicit double sum over pairs of assignments of photons to detectors.
pub fn reference_rate(
    u: &UnitaryMatrix,
    ports: &[usize],
    times: &[f64],
    pols: &[PolarizationVector],
    sources: &SourceSet,
    delta_t: f64,
) -> f64 {
    let n = ports.len();
    let t = DMatrix::from_fn(n, n, |j, i| {
        let amp = chi(&sources.profiles()[i], times[j], delta_t);
        let p = pols[j].components();
        u.entry(ports[j], sources.ports()[i]) * dot(&p, &amp)
    });
    let perms = permutations(n);
    let mut total = c(0.0, 0.0);
    for a in &perms {
        for b in &perms {
            total += (0..n).fold(c(1.0, 0.0), |acc, j| {
                acc * t[(j, a[j])].conj() * t[(j, b[j])]
            });
        }
    }
    total.re
}

/// All permutations of `0..n` by Heap's algorithm.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, items, out);
            if k.is_multiple_of(2) {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    let mut out = Vec::new();
    heap(n, &mut (0..n).collect(), &mut out);
    out
}

/// Rows of `u` at the detected ports (repeated for bunching), columns at the source ports.
pub fn scattering(u: &UnitaryMatrix, ports: &[usize], sources: &[usize]) -> CMat {
    DMatrix::from_fn(ports.len(), sources.len(), |j, i| {
        u.entry(ports[j], sources[i])
    })
}

pub fn factorial_product(ports: &[usize]) -> f64 {
    let mut total = 1.0;
    let mut run = 1;
    for w in 1..=ports.len() {
        if w < ports.len() && ports[w] == ports[w - 1] {
            run += 1;
        } else {
            total *= (1..=run).product::<usize>() as f64;
            run = 1;
        }
    }
    total
}

/// Every nondecreasing `n`-tuple over `1..=m`.
pub fn multisets(m: usize, n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in multisets(m, n - 1) {
        let start = rest.last().copied().unwrap_or(1);
        for p in start..=m {
            let mut v = rest.clone();
            v.push(p);
            out.push(v);
        }
    }
    out
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
