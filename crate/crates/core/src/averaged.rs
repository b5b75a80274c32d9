//! Detection probabilities averaged over detection times and polarizations.
//!
//! For a port sample `D` with multiplicities `n_d`,
//!
//! ```text
//! P_av(D; S) = (∏_d n_d!)⁻¹ Σ_ρ f_ρ(S) perm A_ρ,    (A_ρ)_{j,i} = U*_{j,i} U_{j,ρ(i)},
//! ```
//!
//! where `U` is the scattering submatrix with rows repeated for bunched ports
//! and `f_ρ` the N-photon amplitude overlap. [`p_av_numeric`] integrates the
//! resolved rate directly and serves as the independent check.

use std::collections::BTreeMap;

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MbcsError, Result};
use crate::interferometer::{
    count_port_samples, enumerate_port_samples, submatrix, PortSample, SourceSet, UnitaryMatrix,
};
use crate::limits::{Limits, MAX_NUMERIC_AVERAGE_PHOTONS};
use crate::permanent::{perm_nonnegative, perm_ryser, ComplexMatrix};
use crate::permutation::Permutation;
use crate::quadrature::{composite_rule, NodesWeights, QuadratureSpec};
use crate::spectra::{
    distinguishability_matrix, overlap_f_from_matrix, temporal_amplitude, Amplitude,
    PolarizationVector, SpectralProfile, POLARIZATION_NORM_TOLERANCE,
};

/// Imaginary residue above which a summed probability is silently discarded.
pub const IMAGINARY_RESIDUE_WARN: f64 = 1e-10;
/// Imaginary residue above which a summed probability is rejected.
pub const IMAGINARY_RESIDUE_ERROR: f64 = 1e-8;
/// Tolerance on the total probability of an enumerated distribution.
pub const DISTRIBUTION_NORMALIZATION_TOLERANCE: f64 = 1e-9;

fn checked_submatrix(u: &UnitaryMatrix, d: &PortSample, s: &SourceSet) -> Result<ComplexMatrix> {
    if d.len() != s.len() {
        return Err(MbcsError::Shape(format!(
            "{} detected ports for {} photons",
            d.len(),
            s.len()
        )));
    }
    s.check_fits(u)?;
    d.check_fits(u)?;
    submatrix(u, d, s)
}

fn rho_matrix_of(sub: &ComplexMatrix, rho: &Permutation) -> ComplexMatrix {
    let n = sub.nrows();
    DMatrix::from_fn(n, n, |j, i| sub[(j, i)].conj() * sub[(j, rho.apply(i))])
}

/// `A_ρ = [U*_{j,i} U_{j,ρ(i)}]` on the scattering submatrix of `(D, S)`.
pub fn rho_matrix(
    u: &UnitaryMatrix,
    d: &PortSample,
    s: &SourceSet,
    rho: &Permutation,
) -> Result<ComplexMatrix> {
    let sub = checked_submatrix(u, d, s)?;
    if rho.len() != sub.nrows() {
        return Err(MbcsError::Shape(format!(
            "permutation of {} elements for {} photons",
            rho.len(),
            sub.nrows()
        )));
    }
    Ok(rho_matrix_of(&sub, rho))
}

/// Checks the imaginary residue and sign of a summed probability and returns its real part.
fn real_probability(value: Complex64, context: &str) -> Result<f64> {
    if value.im.abs() > IMAGINARY_RESIDUE_ERROR {
        return Err(MbcsError::NumericalConsistency(format!(
            "{context}: imaginary residue {:e}",
            value.im
        )));
    }
    if value.im.abs() > IMAGINARY_RESIDUE_WARN {
        warn!("{context}: discarding imaginary residue {:e}", value.im);
    }
    if value.re < -IMAGINARY_RESIDUE_ERROR {
        return Err(MbcsError::NumericalConsistency(format!(
            "{context}: negative probability {:e}",
            value.re
        )));
    }
    Ok(value.re.max(0.0))
}

/// The unnormalized terms `f_ρ perm A_ρ` of the averaged probability, one per
/// permutation in lexicographic order.
pub fn p_av_contributions(
    u: &UnitaryMatrix,
    d: &PortSample,
    s: &SourceSet,
) -> Result<Vec<(Permutation, Complex64)>> {
    p_av_contributions_with_limits(u, d, s, &Limits::default())
}

pub fn p_av_contributions_with_limits(
    u: &UnitaryMatrix,
    d: &PortSample,
    s: &SourceSet,
    limits: &Limits,
) -> Result<Vec<(Permutation, Complex64)>> {
    let sub = checked_submatrix(u, d, s)?;
    let n = sub.nrows();
    if n > limits.max_averaged_photons {
        return Err(MbcsError::Size {
            what: "averaged-probability photons",
            size: n,
            limit: limits.max_averaged_photons,
        });
    }
    let g = distinguishability_matrix(s.profiles());
    let perms: Vec<Permutation> = Permutation::all(n).collect();
    perms
        .into_par_iter()
        .map(|rho| {
            let f = overlap_f_from_matrix(&g, &rho);
            let term = if f == Complex64::new(0.0, 0.0) {
                f
            } else {
                f * perm_ryser(&rho_matrix_of(&sub, &rho))?
            };
            Ok((rho, term))
        })
        .collect()
}

/// Averaged detection probability of the port sample `d`.
pub fn p_av(u: &UnitaryMatrix, d: &PortSample, s: &SourceSet) -> Result<f64> {
    p_av_with_limits(u, d, s, &Limits::default())
}

pub fn p_av_with_limits(
    u: &UnitaryMatrix,
    d: &PortSample,
    s: &SourceSet,
    limits: &Limits,
) -> Result<f64> {
    let total: Complex64 = p_av_contributions_with_limits(u, d, s, limits)?
        .into_iter()
        .map(|(_, term)| term)
        .sum();
    real_probability(total / d.bunching_factor(), "p_av")
}

/// Averaged probability for identical photons, `|perm U^(D,S)|² / ∏ n_d!`.
pub fn p_av_identical(u: &UnitaryMatrix, d: &PortSample, s: &SourceSet) -> Result<f64> {
    let sub = checked_submatrix(u, d, s)?;
    Ok(perm_ryser(&sub)?.norm_sqr() / d.bunching_factor())
}

/// Averaged probability for fully distinguishable photons, `perm [|U_{d,s}|²] / ∏ n_d!`.
pub fn p_av_distinguishable(u: &UnitaryMatrix, d: &PortSample, s: &SourceSet) -> Result<f64> {
    let sub = checked_submatrix(u, d, s)?;
    Ok(perm_nonnegative(&sub.map(|z| z.norm_sqr()))? / d.bunching_factor())
}

/// Which photon model an output distribution is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionMode {
    /// Partial distinguishability from the actual spectra.
    General,
    /// All photons treated as identical.
    Identical,
    /// All photons treated as fully distinguishable.
    Distinguishable,
}

impl DistributionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::General => "general",
            Self::Identical => "identical",
            Self::Distinguishable => "distinguishable",
        }
    }
}

/// Averaged probability of every port sample, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDistribution {
    m: usize,
    n: usize,
    mode: DistributionMode,
    entries: Vec<(PortSample, f64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionJson {
    m: usize,
    n: usize,
    mode: DistributionMode,
    entries: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryJson {
    ports: PortSample,
    p: f64,
}

impl OutputDistribution {
    /// Builds a distribution from arbitrary entries; they are sorted into canonical order.
    pub fn new(
        m: usize,
        n: usize,
        mode: DistributionMode,
        entries: Vec<(PortSample, f64)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (ports, p) in entries {
            if ports.len() != n {
                return Err(MbcsError::Shape(format!(
                    "entry {:?} does not hold {n} ports",
                    ports.ports()
                )));
            }
            if ports.ports().iter().any(|&q| q > m) {
                return Err(MbcsError::Range {
                    what: "distribution port",
                    index: *ports.ports().last().unwrap(),
                    max: m,
                });
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(MbcsError::Invalid(format!(
                    "probability {p} for {:?}",
                    ports.ports()
                )));
            }
            if map.insert(ports.clone(), p).is_some() {
                return Err(MbcsError::Invalid(format!(
                    "duplicate entry {:?}",
                    ports.ports()
                )));
            }
        }
        Ok(Self {
            m,
            n,
            mode,
            entries: map.into_iter().collect(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> DistributionMode {
        self.mode
    }

    pub fn entries(&self) -> &[(PortSample, f64)] {
        &self.entries
    }

    pub fn probability(&self, ports: &PortSample) -> f64 {
        self.entries
            .binary_search_by(|(p, _)| p.cmp(ports))
            .map_or(0.0, |k| self.entries[k].1)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn to_json(&self) -> String {
        let doc = DistributionJson {
            m: self.m,
            n: self.n,
            mode: self.mode,
            entries: self
                .entries
                .iter()
                .map(|(ports, p)| EntryJson {
                    ports: ports.clone(),
                    p: *p,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("distribution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DistributionJson =
            serde_json::from_str(text).map_err(|e| MbcsError::Serialization(e.to_string()))?;
        Self::new(
            doc.m,
            doc.n,
            doc.mode,
            doc.entries.into_iter().map(|e| (e.ports, e.p)).collect(),
        )
    }
}

/// Averaged probabilities of every bunching port sample for the sources `s`.
pub fn output_distribution(
    u: &UnitaryMatrix,
    s: &SourceSet,
    mode: DistributionMode,
) -> Result<OutputDistribution> {
    output_distribution_with_limits(u, s, mode, &Limits::default())
}

pub fn output_distribution_with_limits(
    u: &UnitaryMatrix,
    s: &SourceSet,
    mode: DistributionMode,
    limits: &Limits,
) -> Result<OutputDistribution> {
    s.check_fits(u)?;
    let (m, n) = (u.dim(), s.len());
    let count = count_port_samples(m, n, true);
    if count > limits.max_enumerated_samples {
        return Err(MbcsError::Size {
            what: "enumerated port samples",
            size: count,
            limit: limits.max_enumerated_samples,
        });
    }
    let samples = enumerate_port_samples(m, n, true)?;
    let probabilities: Vec<f64> = samples
        .par_iter()
        .map(|d| match mode {
            DistributionMode::General => p_av_with_limits(u, d, s, limits),
            DistributionMode::Identical => p_av_identical(u, d, s),
            DistributionMode::Distinguishable => p_av_distinguishable(u, d, s),
        })
        .collect::<Result<_>>()?;
    let dist = OutputDistribution {
        m,
        n,
        mode,
        entries: samples.into_iter().zip(probabilities).collect(),
    };
    let total = dist.total();
    if (total - 1.0).abs() > DISTRIBUTION_NORMALIZATION_TOLERANCE {
        return Err(MbcsError::NumericalConsistency(format!(
            "output distribution sums to {total}"
        )));
    }
    Ok(dist)
}

/// Per-axis time nodes: composite Gauss–Legendre over every cluster of
/// overlapping photon envelopes.
pub(crate) fn time_axis_rule(profiles: &[SpectralProfile], spec: &QuadratureSpec) -> NodesWeights {
    let mut windows: Vec<(f64, f64)> = profiles
        .iter()
        .map(|p| {
            let half = spec.half_width_sigmas * p.temporal_sigma();
            (p.emission_time() - half, p.emission_time() + half)
        })
        .collect();
    windows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in windows {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    let panels = spec.panels.max(1);
    let degree = spec.nodes.div_ceil(panels).max(1);
    let mut rule = NodesWeights {
        nodes: Vec::new(),
        weights: Vec::new(),
    };
    for (lo, hi) in merged {
        let part = composite_rule(lo, hi, panels, degree);
        rule.nodes.extend(part.nodes);
        rule.weights.extend(part.weights);
    }
    rule
}

/// Averaged probability by direct tensor-product quadrature of the resolved
/// rate over all detection times, summed over basis polarizations `{e1, e2}^N`.
pub fn p_av_numeric(
    u: &UnitaryMatrix,
    d: &PortSample,
    s: &SourceSet,
    spec: &QuadratureSpec,
) -> Result<f64> {
    p_av_numeric_in_basis(
        u,
        d,
        s,
        spec,
        [PolarizationVector::e1(), PolarizationVector::e2()],
    )
}

/// [`p_av_numeric`] with the detector polarizations summed over an arbitrary
/// orthonormal basis.
pub fn p_av_numeric_in_basis(
    u: &UnitaryMatrix,
    d: &PortSample,
    s: &SourceSet,
    spec: &QuadratureSpec,
    basis: [PolarizationVector; 2],
) -> Result<f64> {
    if basis[0].inner(&basis[1]).norm() > POLARIZATION_NORM_TOLERANCE {
        return Err(MbcsError::Invalid(
            "polarization basis is not orthogonal".into(),
        ));
    }
    let sub = checked_submatrix(u, d, s)?;
    let n = sub.nrows();
    if n > MAX_NUMERIC_AVERAGE_PHOTONS {
        return Err(MbcsError::Size {
            what: "p_av_numeric photons",
            size: n,
            limit: MAX_NUMERIC_AVERAGE_PHOTONS,
        });
    }
    let rule = time_axis_rule(s.profiles(), spec);
    let k = rule.len();
    // chi[node][source]
    let chi: Vec<Vec<Amplitude>> = rule
        .nodes
        .iter()
        .map(|&t| {
            s.profiles()
                .iter()
                .map(|p| temporal_amplitude(p, t, 0.0))
                .collect()
        })
        .collect();
    let perms: Vec<Permutation> = Permutation::all(n).collect();
    let points = k.pow(n as u32);
    let total: f64 = (0..points)
        .into_par_iter()
        .map(|flat| {
            let mut idx = [0usize; MAX_NUMERIC_AVERAGE_PHOTONS];
            let mut rest = flat;
            let mut weight = 1.0;
            for slot in idx.iter_mut().take(n) {
                *slot = rest % k;
                rest /= k;
                weight *= rule.weights[*slot];
            }
            let mut rate_sum = 0.0;
            for pol_code in 0..(1usize << n) {
                let entry = |j: usize, i: usize| {
                    let p = &basis[pol_code >> j & 1];
                    sub[(j, i)] * p.project(&chi[idx[j]][i])
                };
                let amplitude: Complex64 = perms
                    .iter()
                    .map(|sigma| {
                        (0..n).fold(Complex64::new(1.0, 0.0), |acc, j| {
                            acc * entry(j, sigma.apply(j))
                        })
                    })
                    .sum();
                rate_sum += amplitude.norm_sqr();
            }
            weight * rate_sum
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    Ok(total / d.bunching_factor())
}
