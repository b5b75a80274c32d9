//! Time- and polarization-resolved N-photon detection rates.
//!
//! For a detection sample `(D, {t_j, p_j})` the rate is `G = |perm T|²` with
//! `T_{j,i} = U_{d_j, s_i} ⟨p_j|χ_i(t_j)⟩`. The explicit double sum over pairs
//! of permutations is kept as an independent oracle, and the structured
//! regimes (single quantum path, independent subsets) have dedicated entry
//! points.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{MbcsError, Result};
use crate::interferometer::{submatrix, PortSample, SourceSet, UnitaryMatrix};
use crate::limits::MAX_DOUBLE_SUM_PHOTONS;
use crate::permanent::{perm_ryser, ComplexMatrix};
use crate::permutation::Permutation;
use crate::spectra::{
    overlap_modulus_matrix, temporal_amplitude, PolarizationVector, PropagationConfig,
};

/// Rows whose entries are all below this modulus make the rate vanish identically.
pub const TRIVIAL_ROW_THRESHOLD: f64 = 1e-30;
/// Largest cross-subset entry tolerated by [`factorized_rate`].
pub const LEAKAGE_THRESHOLD: f64 = 1e-12;
/// Default threshold on `a(s, s')` used by [`interference_support`].
pub const DEFAULT_SUPPORT_EPSILON: f64 = 1e-6;

/// Output ports together with detection times and polarizations, aligned positionally.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSample {
    ports: PortSample,
    times: Vec<f64>,
    polarizations: Vec<PolarizationVector>,
}

impl DetectionSample {
    pub fn new(
        ports: PortSample,
        times: Vec<f64>,
        polarizations: Vec<PolarizationVector>,
    ) -> Result<Self> {
        if times.len() != ports.len() || polarizations.len() != ports.len() {
            return Err(MbcsError::Shape(format!(
                "{} ports, {} times and {} polarizations",
                ports.len(),
                times.len(),
                polarizations.len()
            )));
        }
        if let Some(t) = times.iter().find(|t| !t.is_finite()) {
            return Err(MbcsError::Invalid(format!(
                "detection time {t} is not finite"
            )));
        }
        Ok(Self {
            ports,
            times,
            polarizations,
        })
    }

    pub fn ports(&self) -> &PortSample {
        &self.ports
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn polarizations(&self) -> &[PolarizationVector] {
        &self.polarizations
    }

    pub fn len(&self) -> usize {
        self.ports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ports.is_empty()
    }
}

/// The N x N matrix `T` whose permanent is the detection amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionMatrix(ComplexMatrix);

impl DetectionMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }

    /// True if some detection has no photon amplitude at all.
    pub fn has_trivial_row(&self) -> bool {
        self.0
            .row_iter()
            .any(|row| row.iter().all(|z| z.norm() < TRIVIAL_ROW_THRESHOLD))
    }
}

pub fn detection_matrix(
    u: &UnitaryMatrix,
    sample: &DetectionSample,
    sources: &SourceSet,
    cfg: &PropagationConfig,
) -> Result<DetectionMatrix> {
    if sample.len() != sources.len() {
        return Err(MbcsError::Shape(format!(
            "{} detections for {} photons",
            sample.len(),
            sources.len()
        )));
    }
    sources.check_fits(u)?;
    let scattering = submatrix(u, sample.ports(), sources)?;
    let n = sources.len();
    let profiles = sources.profiles();
    Ok(DetectionMatrix(DMatrix::from_fn(n, n, |j, i| {
        let chi = temporal_amplitude(&profiles[i], sample.times[j], cfg.delta_t);
        scattering[(j, i)] * sample.polarizations[j].project(&chi)
    })))
}

/// `G = |perm T|²`.
pub fn rate(
    u: &UnitaryMatrix,
    sample: &DetectionSample,
    sources: &SourceSet,
    cfg: &PropagationConfig,
) -> Result<f64> {
    let t = detection_matrix(u, sample, sources, cfg)?;
    if t.has_trivial_row() {
        return Ok(0.0);
    }
    Ok(perm_ryser(t.matrix())?.norm_sqr())
}

/// [`rate`] over many detection samples, evaluated in parallel.
pub fn rates(
    u: &UnitaryMatrix,
    samples: &[DetectionSample],
    sources: &SourceSet,
    cfg: &PropagationConfig,
) -> Result<Vec<f64>> {
    samples
        .par_iter()
        .map(|s| rate(u, s, sources, cfg))
        .collect()
}

/// The rate as the explicit double sum over pairs of N-photon amplitudes,
/// `Σ_{σ,σ'} ∏_j T*_{j,σ'(j)} T_{j,σ(j)}`.
pub fn rate_double_sum(
    u: &UnitaryMatrix,
    sample: &DetectionSample,
    sources: &SourceSet,
    cfg: &PropagationConfig,
) -> Result<f64> {
    let n = sources.len();
    if n > MAX_DOUBLE_SUM_PHOTONS {
        return Err(MbcsError::Size {
            what: "rate_double_sum photons",
            size: n,
            limit: MAX_DOUBLE_SUM_PHOTONS,
        });
    }
    let t = detection_matrix(u, sample, sources, cfg)?.into_inner();
    let perms: Vec<Permutation> = Permutation::all(n).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for sigma_conj in &perms {
        for sigma in &perms {
            total += (0..n).fold(Complex64::new(1.0, 0.0), |acc, j| {
                acc * t[(j, sigma_conj.apply(j))].conj() * t[(j, sigma.apply(j))]
            });
        }
    }
    Ok(total.re)
}

/// Rate of the single quantum path where source `i` is detected at position
/// `detector_of_source[i]` of the sample.
pub fn single_path_rate(
    u: &UnitaryMatrix,
    sample: &DetectionSample,
    sources: &SourceSet,
    cfg: &PropagationConfig,
    detector_of_source: &[usize],
) -> Result<f64> {
    let sigma = Permutation::from_images(detector_of_source.to_vec())?;
    let t = detection_matrix(u, sample, sources, cfg)?.into_inner();
    if sigma.len() != t.nrows() {
        return Err(MbcsError::Shape(format!(
            "path assigns {} sources but there are {}",
            sigma.len(),
            t.nrows()
        )));
    }
    let amplitude = (0..sigma.len()).fold(Complex64::new(1.0, 0.0), |acc, i| {
        acc * t[(sigma.apply(i), i)]
    });
    Ok(amplitude.norm_sqr())
}

/// One group of photons that interfere only among themselves: source indices
/// (positions in the [`SourceSet`]) and the detector positions they reach.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetBlock {
    pub sources: Vec<usize>,
    pub detectors: Vec<usize>,
}

impl SubsetBlock {
    pub fn new(sources: Vec<usize>, detectors: Vec<usize>) -> Self {
        Self { sources, detectors }
    }
}

fn check_partition(partition: &[SubsetBlock], n: usize) -> Result<()> {
    let mut source_seen = vec![false; n];
    let mut detector_seen = vec![false; n];
    for (k, block) in partition.iter().enumerate() {
        if block.sources.is_empty() || block.sources.len() != block.detectors.len() {
            return Err(MbcsError::Invalid(format!(
                "block {k} pairs {} sources with {} detectors",
                block.sources.len(),
                block.detectors.len()
            )));
        }
        for (indices, seen) in [
            (&block.sources, &mut source_seen),
            (&block.detectors, &mut detector_seen),
        ] {
            for &i in indices {
                if i >= n || seen[i] {
                    return Err(MbcsError::Invalid(format!(
                        "block {k}: index {i} is out of range or assigned twice"
                    )));
                }
                seen[i] = true;
            }
        }
    }
    if source_seen.iter().chain(&detector_seen).any(|s| !s) {
        return Err(MbcsError::Invalid(
            "partition does not cover every source and detector".into(),
        ));
    }
    Ok(())
}

/// Rate as a product of sub-permanents, one per block of mutually
/// interfering photons: `∏_k |perm T^(D_k, S_k)|²`.
///
/// Fails with [`MbcsError::Precondition`] naming the offending pair when a
/// source has a detection amplitude above [`LEAKAGE_THRESHOLD`] at a detector
/// outside its block.
pub fn factorized_rate(
    u: &UnitaryMatrix,
    sample: &DetectionSample,
    sources: &SourceSet,
    cfg: &PropagationConfig,
    partition: &[SubsetBlock],
) -> Result<f64> {
    let t = detection_matrix(u, sample, sources, cfg)?.into_inner();
    let n = t.nrows();
    check_partition(partition, n)?;
    for block in partition {
        for &i in &block.sources {
            for j in (0..n).filter(|j| !block.detectors.contains(j)) {
                let leak = t[(j, i)].norm();
                if leak > LEAKAGE_THRESHOLD {
                    return Err(MbcsError::Precondition(format!(
                        "source at port {} reaches detector {} (port {}) outside its subset with amplitude {leak:e}",
                        sources.ports()[i],
                        j + 1,
                        sample.ports().ports()[j]
                    )));
                }
            }
        }
    }
    partition.iter().try_fold(1.0, |acc, block| {
        let sub = DMatrix::from_fn(block.detectors.len(), block.sources.len(), |r, c| {
            t[(block.detectors[r], block.sources[c])]
        });
        Ok(acc * perm_ryser(&sub)?.norm_sqr())
    })
}

/// Which N-photon interference patterns the temporal overlaps allow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterferenceSupport {
    /// Every pair of photons overlaps completely.
    Full,
    /// No two photons overlap.
    None,
    /// Photons form groups that overlap completely inside and not at all across;
    /// each group lists source indices.
    Partitioned(Vec<Vec<usize>>),
    /// Anything else.
    Partial,
}

/// Classifies the source set from its interference matrix `a(s, s')`.
pub fn interference_support(sources: &SourceSet, epsilon: f64) -> InterferenceSupport {
    let a = overlap_modulus_matrix(sources.profiles());
    let n = a.nrows();
    if a.iter().all(|&x| x >= 1.0 - epsilon) {
        return InterferenceSupport::Full;
    }
    let off_diagonal = || (0..n).flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)));
    if off_diagonal().all(|(r, c)| a[(r, c)] <= epsilon) {
        return InterferenceSupport::None;
    }
    let mut component = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = groups.len();
        let mut group = Vec::new();
        let mut stack = vec![start];
        component[start] = id;
        while let Some(r) = stack.pop() {
            group.push(r);
            for c in 0..n {
                if component[c] == usize::MAX && a[(r, c)] > epsilon {
                    component[c] = id;
                    stack.push(c);
                }
            }
        }
        group.sort_unstable();
        groups.push(group);
    }
    let internally_full = groups.iter().all(|g| {
        g.iter()
            .all(|&r| g.iter().all(|&c| a[(r, c)] >= 1.0 - epsilon))
    });
    if groups.len() > 1 && internally_full {
        InterferenceSupport::Partitioned(groups)
    } else {
        InterferenceSupport::Partial
    }
}
