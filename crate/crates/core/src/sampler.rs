//! Drawing detection outcomes.
//!
//! [`sample_ports`] draws port samples from an averaged distribution.
//! [`sample_mbcs`] draws full detection samples in two stages: the port sample
//! from the averaged distribution, then times and basis polarizations from the
//! conditional density tabulated on a time grid.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use log::warn;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaged::{output_distribution_with_limits, DistributionMode, OutputDistribution};
use crate::error::{MbcsError, Result};
use crate::interferometer::{submatrix, PortSample, SourceSet, UnitaryMatrix};
use crate::limits::{Limits, MAX_MBCS_SAMPLER_PHOTONS};
use crate::permutation::Permutation;
use crate::spectra::{temporal_amplitude, PropagationConfig};

/// Half-width of the envelope window, in temporal sigmas, that a grid must cover.
pub const GRID_COVERAGE_SIGMAS: f64 = 8.0;
/// Default number of points per time axis.
pub const DEFAULT_GRID_POINTS: usize = 256;
/// Tolerated deviation of a sampled distribution's total from one.
pub const SAMPLING_NORMALIZATION_TOLERANCE: f64 = 1e-6;
pub const TABLE_RESIDUAL_WARN: f64 = 1e-4;
pub const TABLE_RESIDUAL_ERROR: f64 = 1e-2;

/// Uniform grid of detection times, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub num_points: usize,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, num_points: usize) -> Result<Self> {
        let grid = Self {
            t_min,
            t_max,
            num_points,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// The smallest grid with `num_points` points covering every envelope of `sources`.
    pub fn covering(
        sources: &SourceSet,
        cfg: &PropagationConfig,
        num_points: usize,
    ) -> Result<Self> {
        let (lo, hi) = sources
            .profiles()
            .iter()
            .map(|p| envelope_window(p.emission_time() + cfg.delta_t, p.temporal_sigma()))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
                (lo.min(a), hi.max(b))
            });
        if lo > hi {
            return Err(MbcsError::Invalid("no sources to cover".into()));
        }
        Self::new(lo, hi, num_points)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min.is_finite() && self.t_max.is_finite() && self.t_min < self.t_max) {
            return Err(MbcsError::Invalid(format!(
                "time grid needs finite t_min < t_max, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.num_points < 2 {
            return Err(MbcsError::Invalid(format!(
                "time grid needs at least 2 points, got {}",
                self.num_points
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.t_max - self.t_min) / (self.num_points - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        if k + 1 == self.num_points {
            self.t_max
        } else {
            self.t_min + k as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.num_points).map(|k| self.point(k)).collect()
    }

    /// Fails with the index of the first source whose envelope sticks out of the grid.
    pub fn check_coverage(&self, sources: &SourceSet, cfg: &PropagationConfig) -> Result<()> {
        self.coverage_violations(sources, cfg)
            .into_iter()
            .next()
            .map_or(Ok(()), Err)
    }

    /// One error per source whose envelope is not covered.
    pub fn coverage_violations(
        &self,
        sources: &SourceSet,
        cfg: &PropagationConfig,
    ) -> Vec<MbcsError> {
        sources
            .profiles()
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                let (lo, hi) = envelope_window(p.emission_time() + cfg.delta_t, p.temporal_sigma());
                (lo < self.t_min || hi > self.t_max).then(|| MbcsError::GridCoverage {
                    source_index: i,
                    detail: format!(
                        "envelope [{lo}, {hi}] is not inside the grid [{}, {}]",
                        self.t_min, self.t_max
                    ),
                })
            })
            .collect()
    }
}

fn envelope_window(center: f64, sigma: f64) -> (f64, f64) {
    (
        center - GRID_COVERAGE_SIGMAS * sigma,
        center + GRID_COVERAGE_SIGMAS * sigma,
    )
}

/// Detector polarization drawn from the computational basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisLabel {
    E1,
    E2,
}

impl BasisLabel {
    pub fn index(self) -> usize {
        match self {
            Self::E1 => 0,
            Self::E2 => 1,
        }
    }

    fn from_index(index: usize) -> Self {
        if index == 0 {
            Self::E1
        } else {
            Self::E2
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::E1 => "e1",
            Self::E2 => "e2",
        })
    }
}

/// One drawn detection sample. `weight` is the conditional probability
/// density of the drawn times and polarizations given the port sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub ports: PortSample,
    pub times: Vec<f64>,
    pub polarizations: Vec<BasisLabel>,
    pub weight: f64,
}

fn cumulative(probabilities: impl Iterator<Item = f64>) -> Vec<f64> {
    probabilities
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// Inverse-CDF draw; never returns an index whose probability is zero.
fn draw_index(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cdf.last().expect("nonempty table");
    let u = rng.random::<f64>() * total;
    let k = cdf.partition_point(|&c| c <= u);
    if k < cdf.len() {
        k
    } else {
        cdf.partition_point(|&c| c < total)
    }
}

/// `count` independent draws from `dist`, deterministic per seed.
pub fn sample_ports(dist: &OutputDistribution, seed: u64, count: usize) -> Result<Vec<PortSample>> {
    let cdf = cumulative(dist.entries().iter().map(|(_, p)| *p));
    let total = cdf.last().copied().unwrap_or(0.0);
    if (total - 1.0).abs() > SAMPLING_NORMALIZATION_TOLERANCE {
        return Err(MbcsError::Precondition(format!(
            "distribution sums to {total}, expected 1"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| dist.entries()[draw_index(&cdf, &mut rng)].0.clone())
        .collect())
}

/// Rate `G` tabulated on `grid^N × {e1, e2}^N` for one port sample.
///
/// Entry `flat = time_index * 2^N + polarization_code`, where `time_index` is
/// the mixed-radix number with detector 1 as the least significant digit and
/// bit `j` of `polarization_code` selects the polarization of detector `j + 1`.
#[derive(Debug, Clone)]
pub struct ConditionalTable {
    ports: PortSample,
    grid: TimeGrid,
    n: usize,
    rates: Vec<f64>,
    cdf: Vec<f64>,
    /// `Σ G h^N`, the grid estimate of `p_av ∏ n_d!`.
    integral: f64,
}

impl ConditionalTable {
    pub fn build(
        u: &UnitaryMatrix,
        d: &PortSample,
        s: &SourceSet,
        grid: &TimeGrid,
        cfg: &PropagationConfig,
        limits: &Limits,
    ) -> Result<Self> {
        grid.validate()?;
        s.check_fits(u)?;
        d.check_fits(u)?;
        let n = s.len();
        if d.len() != n {
            return Err(MbcsError::Shape(format!(
                "{} detected ports for {n} photons",
                d.len()
            )));
        }
        if n > MAX_MBCS_SAMPLER_PHOTONS {
            return Err(MbcsError::Size {
                what: "time-resolved sampler photons",
                size: n,
                limit: MAX_MBCS_SAMPLER_PHOTONS,
            });
        }
        grid.check_coverage(s, cfg)?;
        let k = grid.num_points;
        let size = k
            .checked_pow(n as u32)
            .and_then(|t| t.checked_mul(1 << n))
            .unwrap_or(usize::MAX);
        if size > limits.max_sampler_table {
            return Err(MbcsError::Size {
                what: "time-resolved sampler table",
                size,
                limit: limits.max_sampler_table,
            });
        }
        let sub = submatrix(u, d, s)?;
        let chi: Vec<Vec<[Complex64; 2]>> = grid
            .points()
            .iter()
            .map(|&t| {
                s.profiles()
                    .iter()
                    .map(|p| temporal_amplitude(p, t, cfg.delta_t))
                    .collect()
            })
            .collect();
        let perms: Vec<Permutation> = Permutation::all(n).collect();
        let pol_count = 1usize << n;
        let rates: Vec<f64> = (0..size)
            .into_par_iter()
            .map(|flat| {
                let pol = flat % pol_count;
                let mut rest = flat / pol_count;
                let mut nodes = [0usize; MAX_MBCS_SAMPLER_PHOTONS];
                for slot in nodes.iter_mut().take(n) {
                    *slot = rest % k;
                    rest /= k;
                }
                let entry = |j: usize, i: usize| sub[(j, i)] * chi[nodes[j]][i][pol >> j & 1];
                perms
                    .iter()
                    .map(|sigma| {
                        (0..n).fold(Complex64::new(1.0, 0.0), |acc, j| {
                            acc * entry(j, sigma.apply(j))
                        })
                    })
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect();
        let cdf = cumulative(rates.iter().copied());
        let integral = cdf.last().copied().unwrap_or(0.0) * grid.step().powi(n as i32);
        Ok(Self {
            ports: d.clone(),
            grid: *grid,
            n,
            rates,
            cdf,
            integral,
        })
    }

    pub fn ports(&self) -> &PortSample {
        &self.ports
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// Times and polarizations of a flat table index.
    pub fn decode(&self, flat: usize) -> (Vec<f64>, Vec<BasisLabel>) {
        let pol_count = 1usize << self.n;
        let pol = flat % pol_count;
        let mut rest = flat / pol_count;
        let mut times = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            times.push(self.grid.point(rest % self.grid.num_points));
            rest /= self.grid.num_points;
        }
        let labels = (0..self.n)
            .map(|j| BasisLabel::from_index(pol >> j & 1))
            .collect();
        (times, labels)
    }

    /// Grid-node index of detector `detector` for a flat table index.
    pub fn time_index(&self, flat: usize, detector: usize) -> usize {
        (flat >> self.n) / self.grid.num_points.pow(detector as u32) % self.grid.num_points
    }

    /// Probability mass of each grid node for the time of detector `detector`.
    pub fn time_marginal(&self, detector: usize) -> Vec<f64> {
        let total = *self.cdf.last().unwrap_or(&0.0);
        let mut marginal = vec![0.0; self.grid.num_points];
        for (flat, &g) in self.rates.iter().enumerate() {
            marginal[self.time_index(flat, detector)] += g;
        }
        marginal.iter_mut().for_each(|p| *p /= total);
        marginal
    }

    /// Compares the grid integral with the analytic `p_av ∏ n_d!`.
    pub fn check_normalization(&self, p_av: f64) -> Result<()> {
        let expected = p_av * self.ports.bunching_factor();
        let residual = if expected > 1e-9 {
            (self.integral - expected).abs() / expected
        } else {
            (self.integral - expected).abs()
        };
        if residual > TABLE_RESIDUAL_ERROR {
            return Err(MbcsError::NumericalConsistency(format!(
                "conditional table for {:?} integrates to {} but p_av gives {expected}",
                self.ports.ports(),
                self.integral
            )));
        }
        if residual > TABLE_RESIDUAL_WARN {
            warn!(
                "conditional table for {:?}: normalization residual {residual:e}",
                self.ports.ports()
            );
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng, p_av: f64) -> SampleRecord {
        let flat = draw_index(&self.cdf, rng);
        let (times, polarizations) = self.decode(flat);
        SampleRecord {
            ports: self.ports.clone(),
            times,
            polarizations,
            weight: self.rates[flat] / (p_av * self.ports.bunching_factor()),
        }
    }
}

/// Two-stage draws of full detection samples, deterministic per seed.
pub fn sample_mbcs(
    u: &UnitaryMatrix,
    s: &SourceSet,
    grid: &TimeGrid,
    cfg: &PropagationConfig,
    seed: u64,
    count: usize,
) -> Result<Vec<SampleRecord>> {
    sample_mbcs_with_limits(u, s, grid, cfg, seed, count, &Limits::default())
}

pub fn sample_mbcs_with_limits(
    u: &UnitaryMatrix,
    s: &SourceSet,
    grid: &TimeGrid,
    cfg: &PropagationConfig,
    seed: u64,
    count: usize,
    limits: &Limits,
) -> Result<Vec<SampleRecord>> {
    grid.validate()?;
    if s.len() > MAX_MBCS_SAMPLER_PHOTONS {
        return Err(MbcsError::Size {
            what: "time-resolved sampler photons",
            size: s.len(),
            limit: MAX_MBCS_SAMPLER_PHOTONS,
        });
    }
    grid.check_coverage(s, cfg)?;
    let dist = output_distribution_with_limits(u, s, DistributionMode::General, limits)?;
    let cdf = cumulative(dist.entries().iter().map(|(_, p)| *p));
    let mut tables: HashMap<usize, ConditionalTable> = HashMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let k = draw_index(&cdf, &mut rng);
        let (ports, p_av) = &dist.entries()[k];
        let table = match tables.entry(k) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => {
                let table = ConditionalTable::build(u, ports, s, grid, cfg, limits)?;
                table.check_normalization(*p_av)?;
                e.insert(table)
            }
        };
        records.push(table.draw(&mut rng, *p_av));
    }
    Ok(records)
}

/// Writes records as CSV with header `port_1..port_N,t_1..t_N,pol_1..pol_N`.
pub fn write_samples_csv<W: Write>(
    records: &[SampleRecord],
    n: usize,
    mut out: W,
) -> std::io::Result<()> {
    let header: Vec<String> = ["port", "t", "pol"]
        .iter()
        .flat_map(|name| (1..=n).map(move |j| format!("{name}_{j}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for r in records {
        let fields: Vec<String> = r
            .ports
            .ports()
            .iter()
            .map(|p| p.to_string())
            .chain(r.times.iter().map(|t| t.to_string()))
            .chain(r.polarizations.iter().map(|l| l.to_string()))
            .collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Writes port samples as CSV with header `port_1..port_N`.
pub fn write_ports_csv<W: Write>(
    samples: &[PortSample],
    n: usize,
    mut out: W,
) -> std::io::Result<()> {
    let header: Vec<String> = (1..=n).map(|j| format!("port_{j}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for d in samples {
        let fields: Vec<String> = d.ports().iter().map(|p| p.to_string()).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
