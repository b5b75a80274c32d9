//! Single-photon spectral and temporal amplitudes, and the pairwise and
//! N-wise overlap quantities built from them.
//!
//! All quantities are dimensionless: times are measured in units of the
//! inverse of a reference bandwidth and frequencies in units of that
//! bandwidth. Photons have Gaussian spectra
//!
//! ```text
//! ξ(ω) = v (2π Δω²)^(-1/4) exp(-(ω-ω₀)² / 4Δω²) exp(iω t₀)
//! ```
//!
//! whose temporal amplitude, with the transform `F[f](t) = (2π)^(-1/2) ∫ f(ω) e^(-iωt) dω`
//! and a common propagation delay `Δt`, is
//!
//! ```text
//! χ(t) = v (2Δω²/π)^(1/4) exp(-Δω² τ²) exp(-iω₀ τ),   τ = t - t₀ - Δt.
//! ```

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MbcsError, Result};
use crate::permutation::Permutation;
use crate::quadrature::integrate_adaptive;

/// Tolerance on the unit norm of a polarization vector.
pub const POLARIZATION_NORM_TOLERANCE: f64 = 1e-12;
/// Below `NARROW_BAND_RATIO * Δω` the central frequency is flagged as violating
/// the narrow-bandwidth approximation.
pub const NARROW_BAND_RATIO: f64 = 6.0;
/// Absolute tolerance of the adaptive overlap quadrature.
pub const OVERLAP_QUADRATURE_TOLERANCE: f64 = 1e-10;
/// Half-width of the overlap quadrature window, in temporal standard deviations.
pub const OVERLAP_WINDOW_SIGMAS: f64 = 10.0;

/// A two-component complex vector, e.g. a temporal amplitude with its polarization.
pub type Amplitude = [Complex64; 2];

/// Unit-norm polarization in the fixed basis `{e1, e2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[Complex64; 2]", into = "[Complex64; 2]")]
pub struct PolarizationVector([Complex64; 2]);

impl PolarizationVector {
    pub fn new(c1: Complex64, c2: Complex64) -> Result<Self> {
        let norm = c1.norm_sqr() + c2.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > POLARIZATION_NORM_TOLERANCE {
            return Err(MbcsError::Invalid(format!(
                "polarization vector has squared norm {norm}, expected 1"
            )));
        }
        Ok(Self([c1, c2]))
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(c1: Complex64, c2: Complex64) -> Result<Self> {
        let norm = (c1.norm_sqr() + c2.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(MbcsError::Invalid(
                "cannot normalize a zero polarization vector".into(),
            ));
        }
        Ok(Self([c1 / norm, c2 / norm]))
    }

    pub fn e1() -> Self {
        Self([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
    }

    pub fn e2() -> Self {
        Self([Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
    }

    /// Basis vector `e1` (`index == 0`) or `e2` (`index == 1`).
    pub fn basis(index: usize) -> Self {
        match index {
            0 => Self::e1(),
            1 => Self::e2(),
            _ => panic!("polarization basis index {index} out of range"),
        }
    }

    /// Linear polarization at angle `theta` from `e1`.
    pub fn linear(theta: f64) -> Self {
        Self([
            Complex64::new(theta.cos(), 0.0),
            Complex64::new(theta.sin(), 0.0),
        ])
    }

    pub fn components(&self) -> [Complex64; 2] {
        self.0
    }

    /// Hermitian inner product `⟨self|other⟩`, conjugating `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    /// Component of an amplitude along this polarization, `⟨self|χ⟩`.
    pub fn project(&self, amplitude: &Amplitude) -> Complex64 {
        self.0[0].conj() * amplitude[0] + self.0[1].conj() * amplitude[1]
    }
}

impl TryFrom<[Complex64; 2]> for PolarizationVector {
    type Error = MbcsError;

    fn try_from(c: [Complex64; 2]) -> Result<Self> {
        Self::new(c[0], c[1])
    }
}

impl From<PolarizationVector> for [Complex64; 2] {
    fn from(p: PolarizationVector) -> Self {
        p.0
    }
}

/// Gaussian single-photon spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralProfile {
    bandwidth: f64,
    central_frequency: f64,
    emission_time: f64,
    polarization: PolarizationVector,
}

impl SpectralProfile {
    pub fn new(
        bandwidth: f64,
        central_frequency: f64,
        emission_time: f64,
        polarization: PolarizationVector,
    ) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(MbcsError::Invalid(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        if !(central_frequency.is_finite() && central_frequency >= 0.0) {
            return Err(MbcsError::Invalid(format!(
                "central frequency must be nonnegative, got {central_frequency}"
            )));
        }
        if !emission_time.is_finite() {
            return Err(MbcsError::Invalid(format!(
                "emission time must be finite, got {emission_time}"
            )));
        }
        Ok(Self {
            bandwidth,
            central_frequency,
            emission_time,
            polarization,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn central_frequency(&self) -> f64 {
        self.central_frequency
    }

    pub fn emission_time(&self) -> f64 {
        self.emission_time
    }

    pub fn polarization(&self) -> PolarizationVector {
        self.polarization
    }

    pub fn with_emission_time(mut self, t0: f64) -> Self {
        self.emission_time = t0;
        self
    }

    pub fn with_central_frequency(mut self, omega0: f64) -> Self {
        self.central_frequency = omega0;
        self
    }

    pub fn with_polarization(mut self, polarization: PolarizationVector) -> Self {
        self.polarization = polarization;
        self
    }

    /// Standard deviation of the detection-time density `|χ(t)|²`, `1/(2Δω)`.
    pub fn temporal_sigma(&self) -> f64 {
        0.5 / self.bandwidth
    }

    /// True if the central frequency is too low for the narrow-bandwidth approximation.
    pub fn violates_narrow_band(&self) -> bool {
        self.central_frequency < NARROW_BAND_RATIO * self.bandwidth
    }

    /// Scalar temporal envelope `(2Δω²/π)^(1/4) exp(-Δω²τ²)` at delay `tau`.
    fn envelope(&self, tau: f64) -> f64 {
        let dw2 = self.bandwidth * self.bandwidth;
        (2.0 * dw2 / PI).powf(0.25) * (-dw2 * tau * tau).exp()
    }

    /// Peak of `|χ(t)|`.
    pub fn peak_amplitude(&self) -> f64 {
        self.envelope(0.0)
    }
}

/// Common propagation delay through the interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub delta_t: f64,
}

impl PropagationConfig {
    pub fn new(delta_t: f64) -> Result<Self> {
        if !delta_t.is_finite() {
            return Err(MbcsError::Invalid(format!(
                "propagation delay must be finite, got {delta_t}"
            )));
        }
        Ok(Self { delta_t })
    }
}

/// Temporal detection amplitude `χ(t)` of a photon, polarization included.
pub fn temporal_amplitude(profile: &SpectralProfile, t: f64, delta_t: f64) -> Amplitude {
    let tau = t - profile.emission_time - delta_t;
    let scalar = Complex64::from_polar(profile.envelope(tau), -profile.central_frequency * tau);
    let v = profile.polarization.components();
    [v[0] * scalar, v[1] * scalar]
}

/// Overlap of the moduli of two temporal amplitudes, closed form for Gaussians.
pub fn overlap_modulus_a(s: &SpectralProfile, s2: &SpectralProfile) -> f64 {
    if s == s2 {
        return 1.0;
    }
    let pol = s.polarization.inner(&s2.polarization).norm();
    let (w1, w2) = (s.bandwidth * s.bandwidth, s2.bandwidth * s2.bandwidth);
    let sum = w1 + w2;
    let dt = s2.emission_time - s.emission_time;
    (pol * (2.0 * s.bandwidth * s2.bandwidth / sum).sqrt() * (-(w1 * w2 / sum) * dt * dt).exp())
        .min(1.0)
}

/// Two-photon distinguishability factor `g(i, i') = ∫ χ_i(t)† χ_i'(t) dt`, closed form for Gaussians.
pub fn distinguishability_g(i: &SpectralProfile, i2: &SpectralProfile) -> Complex64 {
    if i == i2 {
        return Complex64::new(1.0, 0.0);
    }
    let pol = i.polarization.inner(&i2.polarization);
    let (w1, w2) = (i.bandwidth * i.bandwidth, i2.bandwidth * i2.bandwidth);
    let sum = w1 + w2;
    let dw0 = i.central_frequency - i2.central_frequency;
    let dt0 = i.emission_time - i2.emission_time;
    let modulus = (2.0 * i.bandwidth * i2.bandwidth / sum).sqrt()
        * (-dw0 * dw0 / (4.0 * sum)).exp()
        * (-(w1 * w2 / sum) * dt0 * dt0).exp();
    let mean_frequency = (i.central_frequency * w2 + i2.central_frequency * w1) / sum;
    pol * Complex64::from_polar(modulus, -mean_frequency * dt0)
}

/// Quadrature window covering both photons' envelopes.
fn overlap_window(s: &SpectralProfile, s2: &SpectralProfile) -> (f64, f64) {
    let sigma = s.temporal_sigma().max(s2.temporal_sigma());
    let lo = s.emission_time.min(s2.emission_time) - OVERLAP_WINDOW_SIGMAS * sigma;
    let hi = s.emission_time.max(s2.emission_time) + OVERLAP_WINDOW_SIGMAS * sigma;
    (lo, hi)
}

/// `∫ |⟨χ₁(t)|χ₂(t)⟩| dt` for arbitrary amplitude functions over `[lo, hi]`.
pub fn modulus_overlap_quadrature(
    chi1: impl Fn(f64) -> Amplitude,
    chi2: impl Fn(f64) -> Amplitude,
    lo: f64,
    hi: f64,
) -> f64 {
    integrate_adaptive(lo, hi, OVERLAP_QUADRATURE_TOLERANCE, |t| {
        let (a, b) = (chi1(t), chi2(t));
        Complex64::new((a[0].conj() * b[0] + a[1].conj() * b[1]).norm(), 0.0)
    })
    .re
}

/// `∫ ⟨χ₁(t)|χ₂(t)⟩ dt` for arbitrary amplitude functions over `[lo, hi]`.
pub fn amplitude_overlap_quadrature(
    chi1: impl Fn(f64) -> Amplitude,
    chi2: impl Fn(f64) -> Amplitude,
    lo: f64,
    hi: f64,
) -> Complex64 {
    integrate_adaptive(lo, hi, OVERLAP_QUADRATURE_TOLERANCE, |t| {
        let (a, b) = (chi1(t), chi2(t));
        a[0].conj() * b[0] + a[1].conj() * b[1]
    })
}

/// [`overlap_modulus_a`] evaluated by numerical integration in the time domain.
pub fn overlap_modulus_a_quadrature(s: &SpectralProfile, s2: &SpectralProfile) -> f64 {
    let (lo, hi) = overlap_window(s, s2);
    modulus_overlap_quadrature(
        |t| temporal_amplitude(s, t, 0.0),
        |t| temporal_amplitude(s2, t, 0.0),
        lo,
        hi,
    )
}

/// [`distinguishability_g`] evaluated by numerical integration in the time domain.
pub fn distinguishability_g_quadrature(i: &SpectralProfile, i2: &SpectralProfile) -> Complex64 {
    let (lo, hi) = overlap_window(i, i2);
    amplitude_overlap_quadrature(
        |t| temporal_amplitude(i, t, 0.0),
        |t| temporal_amplitude(i2, t, 0.0),
        lo,
        hi,
    )
}

/// Matrix of all pairwise `a(s, s')`.
pub fn overlap_modulus_matrix(profiles: &[SpectralProfile]) -> DMatrix<f64> {
    let n = profiles.len();
    DMatrix::from_fn(n, n, |r, c| overlap_modulus_a(&profiles[r], &profiles[c]))
}

/// Matrix of all pairwise `g(i, i')`.
pub fn distinguishability_matrix(profiles: &[SpectralProfile]) -> DMatrix<Complex64> {
    let n = profiles.len();
    DMatrix::from_fn(n, n, |r, c| {
        distinguishability_g(&profiles[r], &profiles[c])
    })
}

/// N-photon amplitude overlap `f_ρ = ∏_i g(i, ρ(i))`.
pub fn amplitude_overlap_f(profiles: &[SpectralProfile], rho: &Permutation) -> Result<Complex64> {
    if rho.len() != profiles.len() {
        return Err(MbcsError::Shape(format!(
            "permutation of {} elements applied to {} sources",
            rho.len(),
            profiles.len()
        )));
    }
    Ok(overlap_f_from_matrix(
        &distinguishability_matrix(profiles),
        rho,
    ))
}

/// `f_ρ` from a precomputed [`distinguishability_matrix`].
pub fn overlap_f_from_matrix(g: &DMatrix<Complex64>, rho: &Permutation) -> Complex64 {
    (0..rho.len()).fold(Complex64::new(1.0, 0.0), |acc, i| {
        acc * g[(i, rho.apply(i))]
    })
}
