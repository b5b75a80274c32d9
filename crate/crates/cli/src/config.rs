//! Experiment configuration: parsing and the full precondition sweep.

use std::fmt;
use std::path::{Path, PathBuf};

use mbcs::averaged::DistributionMode;
use mbcs::interferometer::{count_port_samples, PortSample, SourceSet, UnitaryMatrix};
use mbcs::limits::{Limits, MAX_MBCS_SAMPLER_PHOTONS};
use mbcs::rates::DetectionSample;
use mbcs::sampler::{TimeGrid, DEFAULT_GRID_POINTS};
use mbcs::spectra::NARROW_BAND_RATIO;
use mbcs::{
    beam_splitter_50_50, haar_random, BasisLabel, MbcsError, PolarizationVector, PropagationConfig,
    SpectralProfile,
};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

const MAX_HAAR_DIMENSION: usize = 256;
const MAX_SWEEP_POINTS: usize = 100_000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub interferometer: InterferometerSpec,
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub delta_t: f64,
    /// Seed of the sampling modes.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub limits: Limits,
    pub mode: ModeSpec,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterferometerSpec {
    Haar { m: usize, seed: u64 },
    BeamSplitter,
    File { path: PathBuf },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub port: usize,
    pub bandwidth: f64,
    pub central_frequency: f64,
    #[serde(default)]
    pub emission_time: f64,
    #[serde(default)]
    pub polarization: PolarizationSpec,
}

/// `"e1"`, `"e2"` or explicit components `{"re": [a, b], "im": [c, d]}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PolarizationSpec {
    Basis(BasisLabel),
    Components { re: [f64; 2], im: [f64; 2] },
}

impl Default for PolarizationSpec {
    fn default() -> Self {
        Self::Basis(BasisLabel::E1)
    }
}

impl PolarizationSpec {
    fn resolve(&self) -> Result<PolarizationVector, MbcsError> {
        match self {
            Self::Basis(label) => Ok(PolarizationVector::basis(label.index())),
            Self::Components { re, im } => {
                PolarizationVector::new(Complex64::new(re[0], im[0]), Complex64::new(re[1], im[1]))
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModeSpec {
    ResolvedRate(ResolvedRateSpec),
    Averaged(AveragedSpec),
    Distribution(DistributionSpec),
    SamplePorts(SamplePortsSpec),
    SampleMbcs(SampleMbcsSpec),
    Figure(FigureSpec),
}

impl ModeSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ResolvedRate(_) => "resolved_rate",
            Self::Averaged(_) => "averaged",
            Self::Distribution(_) => "distribution",
            Self::SamplePorts(_) => "sample_ports",
            Self::SampleMbcs(_) => "sample_mbcs",
            Self::Figure(_) => "figure",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedRateSpec {
    pub detection: DetectionSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragedSpec {
    pub ports: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    #[serde(default)]
    pub variant: Option<DistributionMode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplePortsSpec {
    pub count: usize,
    #[serde(default)]
    pub variant: Option<DistributionMode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleMbcsSpec {
    pub count: usize,
    #[serde(default)]
    pub grid: GridSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSpec {
    pub figure: FigureKind,
    /// Emission-time offsets, in units of the first source's inverse bandwidth.
    #[serde(default)]
    pub time_range: Option<[f64; 2]>,
    #[serde(default)]
    pub time_points: Option<usize>,
    /// Color offsets, in units of the first source's bandwidth.
    #[serde(default)]
    pub color_range: Option<[f64; 2]>,
    #[serde(default)]
    pub color_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSpec {
    pub ports: Vec<usize>,
    pub times: Vec<f64>,
    #[serde(default)]
    pub polarizations: Option<Vec<PolarizationSpec>>,
}

/// Missing bounds default to the smallest window covering every envelope.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub num_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    HomDip,
    OverlapA,
    OverlapG,
}

/// One failed check, located by a field path such as `sources[1].bandwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub errors: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl Report {
    fn error(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Everything a run needs, checked.
#[derive(Debug)]
pub struct Experiment {
    pub u: UnitaryMatrix,
    pub sources: SourceSet,
    pub propagation: PropagationConfig,
    pub limits: Limits,
    pub seed: u64,
    pub mode: Mode,
}

#[derive(Debug)]
pub enum Mode {
    ResolvedRate(DetectionSample),
    Averaged(PortSample),
    Distribution(DistributionMode),
    SamplePorts {
        count: usize,
        variant: DistributionMode,
    },
    SampleMbcs {
        count: usize,
        grid: TimeGrid,
    },
    Figure {
        kind: FigureKind,
        times: Vec<f64>,
        colors: Vec<f64>,
    },
}

/// Parses a config document, reporting the field path of any syntax or type error.
pub fn parse(text: &str) -> Result<ExperimentConfig, Violation> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let refined = if path == "mode" {
            refine_mode(text)
        } else {
            None
        };
        refined.unwrap_or_else(|| Violation {
            path: if path == "." { "config".into() } else { path },
            message: e.into_inner().to_string(),
        })
    })
}

fn body_error<T: DeserializeOwned>(body: Value) -> Option<Violation> {
    serde_path_to_error::deserialize::<_, T>(body)
        .err()
        .map(|e| Violation {
            path: format!("mode.{}", e.path()),
            message: e.into_inner().to_string(),
        })
}

/// Tagged enums hide the path inside the variant; deserialize the body again to find it.
fn refine_mode(text: &str) -> Option<Violation> {
    let mut root: Value = serde_json::from_str(text).ok()?;
    let body = root.get_mut("mode")?.as_object_mut()?;
    let tag = body.remove("type")?;
    let body = Value::Object(body.clone());
    match tag.as_str()? {
        "resolved_rate" => body_error::<ResolvedRateSpec>(body),
        "averaged" => body_error::<AveragedSpec>(body),
        "distribution" => body_error::<DistributionSpec>(body),
        "sample_ports" => body_error::<SamplePortsSpec>(body),
        "sample_mbcs" => body_error::<SampleMbcsSpec>(body),
        "figure" => body_error::<FigureSpec>(body),
        _ => None,
    }
}

fn load_interferometer(
    spec: &InterferometerSpec,
    base_dir: &Path,
    report: &mut Report,
) -> Option<UnitaryMatrix> {
    match spec {
        InterferometerSpec::Haar { m, seed } => {
            if *m == 0 || *m > MAX_HAAR_DIMENSION {
                report.error(
                    "interferometer.m",
                    format!("must be in [1, {MAX_HAAR_DIMENSION}], got {m}"),
                );
                None
            } else {
                Some(haar_random(*m, *seed))
            }
        }
        InterferometerSpec::BeamSplitter => Some(beam_splitter_50_50()),
        InterferometerSpec::File { path } => {
            let full = base_dir.join(path);
            match std::fs::read_to_string(&full) {
                Err(e) => {
                    report.error(
                        "interferometer.path",
                        format!("cannot read {}: {e}", full.display()),
                    );
                    None
                }
                Ok(text) => match UnitaryMatrix::from_json(&text) {
                    Ok(u) => Some(u),
                    Err(e) => {
                        report.error("interferometer.path", format!("{}: {e}", full.display()));
                        None
                    }
                },
            }
        }
    }
}

fn check_profiles(
    config: &ExperimentConfig,
    m: Option<usize>,
    report: &mut Report,
) -> Vec<Option<SpectralProfile>> {
    if config.sources.is_empty() {
        report.error("sources", "at least one source is required");
    }
    let mut profiles = Vec::new();
    for (i, src) in config.sources.iter().enumerate() {
        let path = |field: &str| format!("sources[{i}].{field}");
        if src.port == 0 || m.is_some_and(|m| src.port > m) {
            let bound = m.map_or(String::new(), |m| format!(" in [1, {m}]"));
            report.error(
                path("port"),
                format!("port {} is not a valid input port{bound}", src.port),
            );
        }
        if let Some(j) = config.sources[..i].iter().position(|o| o.port == src.port) {
            report.error(
                path("port"),
                format!("port {} is already used by sources[{j}]", src.port),
            );
        }
        if !(src.bandwidth.is_finite() && src.bandwidth > 0.0) {
            report.error(
                path("bandwidth"),
                format!("must be finite and positive, got {}", src.bandwidth),
            );
        }
        if !(src.central_frequency.is_finite() && src.central_frequency >= 0.0) {
            report.error(
                path("central_frequency"),
                format!(
                    "must be finite and nonnegative, got {}",
                    src.central_frequency
                ),
            );
        }
        if !src.emission_time.is_finite() {
            report.error(path("emission_time"), "must be finite");
        }
        let polarization = src.polarization.resolve();
        if let Err(e) = &polarization {
            report.error(path("polarization"), e.to_string());
        }
        let profile = polarization.ok().and_then(|p| {
            SpectralProfile::new(src.bandwidth, src.central_frequency, src.emission_time, p).ok()
        });
        if let Some(p) = &profile {
            if p.violates_narrow_band() {
                report.warn(
                    format!("sources[{i}]"),
                    format!(
                        "central frequency {} is below {NARROW_BAND_RATIO} bandwidths; the narrow-band approximation is poor",
                        p.central_frequency()
                    ),
                );
            }
        }
        profiles.push(profile);
    }
    if let Some(m) = m {
        if config.sources.len() > m {
            report.error(
                "sources",
                format!(
                    "{} photons need {} distinct input ports but the interferometer has {m}",
                    config.sources.len(),
                    config.sources.len()
                ),
            );
        }
    }
    profiles
}

fn check_limits(limits: &Limits, report: &mut Report) {
    for (name, value) in [
        ("max_averaged_photons", limits.max_averaged_photons),
        ("max_enumerated_samples", limits.max_enumerated_samples),
        ("max_sampler_table", limits.max_sampler_table),
    ] {
        if value == 0 {
            report.error(format!("limits.{name}"), "must be positive");
        }
    }
}

fn check_ports(ports: &[usize], n: usize, m: usize, path: &str, report: &mut Report) -> bool {
    let mut ok = true;
    if ports.len() != n {
        report.error(path, format!("lists {} ports for {n} photons", ports.len()));
        ok = false;
    }
    for (j, &p) in ports.iter().enumerate() {
        if p == 0 || p > m {
            report.error(format!("{path}[{j}]"), format!("port {p} outside [1, {m}]"));
            ok = false;
        }
    }
    ok
}

fn check_enumeration(m: usize, n: usize, limits: &Limits, report: &mut Report) {
    let count = count_port_samples(m, n, true);
    if count > limits.max_enumerated_samples {
        report.error(
            "mode",
            format!(
                "{count} port samples exceed limits.max_enumerated_samples = {}",
                limits.max_enumerated_samples
            ),
        );
    }
    if n > limits.max_averaged_photons {
        report.error(
            "mode",
            format!(
                "{n} photons exceed limits.max_averaged_photons = {}",
                limits.max_averaged_photons
            ),
        );
    }
}

fn sweep(range: [f64; 2], points: usize, unit: f64, path: &str, report: &mut Report) -> Vec<f64> {
    if !(range[0].is_finite() && range[1].is_finite() && range[0] < range[1]) {
        report.error(
            path,
            format!("needs finite bounds with min < max, got {range:?}"),
        );
        return Vec::new();
    }
    if !(2..=MAX_SWEEP_POINTS).contains(&points) {
        report.error(
            path,
            format!("point count must be in [2, {MAX_SWEEP_POINTS}], got {points}"),
        );
        return Vec::new();
    }
    (0..points)
        .map(|k| unit * (range[0] + (range[1] - range[0]) * k as f64 / (points - 1) as f64))
        .collect()
}

fn check_mode(
    config: &ExperimentConfig,
    u: &UnitaryMatrix,
    sources: &SourceSet,
    propagation: &PropagationConfig,
    report: &mut Report,
) -> Option<Mode> {
    let (m, n) = (u.dim(), sources.len());
    let limits = &config.limits;
    match &config.mode {
        ModeSpec::ResolvedRate(ResolvedRateSpec { detection }) => {
            let ok = check_ports(&detection.ports, n, m, "mode.detection.ports", report);
            if detection.times.len() != n {
                report.error(
                    "mode.detection.times",
                    format!("lists {} times for {n} photons", detection.times.len()),
                );
            }
            if let Some(j) = detection.times.iter().position(|t| !t.is_finite()) {
                report.error(format!("mode.detection.times[{j}]"), "must be finite");
            }
            let specs = detection
                .polarizations
                .clone()
                .unwrap_or_else(|| vec![PolarizationSpec::default(); n]);
            if specs.len() != n {
                report.error(
                    "mode.detection.polarizations",
                    format!("lists {} polarizations for {n} photons", specs.len()),
                );
            }
            let mut polarizations = Vec::new();
            for (j, spec) in specs.iter().enumerate() {
                match spec.resolve() {
                    Ok(p) => polarizations.push(p),
                    Err(e) => {
                        report.error(format!("mode.detection.polarizations[{j}]"), e.to_string())
                    }
                }
            }
            if !ok || !report.is_clean() {
                return None;
            }
            // Detections are listed in any order; sort them into canonical port order.
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&j| detection.ports[j]);
            let ports =
                PortSample::new(order.iter().map(|&j| detection.ports[j]).collect()).ok()?;
            let times = order.iter().map(|&j| detection.times[j]).collect();
            let polarizations = order.iter().map(|&j| polarizations[j]).collect();
            match DetectionSample::new(ports, times, polarizations) {
                Ok(sample) => Some(Mode::ResolvedRate(sample)),
                Err(e) => {
                    report.error("mode.detection", e.to_string());
                    None
                }
            }
        }
        ModeSpec::Averaged(AveragedSpec { ports }) => {
            if !check_ports(ports, n, m, "mode.ports", report) {
                return None;
            }
            if n > limits.max_averaged_photons {
                report.error(
                    "mode",
                    format!(
                        "{n} photons exceed limits.max_averaged_photons = {}",
                        limits.max_averaged_photons
                    ),
                );
                return None;
            }
            PortSample::from_unsorted(ports.clone())
                .ok()
                .map(Mode::Averaged)
        }
        ModeSpec::Distribution(DistributionSpec { variant }) => {
            check_enumeration(m, n, limits, report);
            Some(Mode::Distribution(
                variant.unwrap_or(DistributionMode::General),
            ))
        }
        ModeSpec::SamplePorts(SamplePortsSpec { count, variant }) => {
            check_enumeration(m, n, limits, report);
            if *count == 0 {
                report.error("mode.count", "must be positive");
            }
            Some(Mode::SamplePorts {
                count: *count,
                variant: variant.unwrap_or(DistributionMode::General),
            })
        }
        ModeSpec::SampleMbcs(SampleMbcsSpec { count, grid }) => {
            check_enumeration(m, n, limits, report);
            if *count == 0 {
                report.error("mode.count", "must be positive");
            }
            if n > MAX_MBCS_SAMPLER_PHOTONS {
                report.error(
                    "sources",
                    format!("time-resolved sampling supports at most {MAX_MBCS_SAMPLER_PHOTONS} photons, got {n}"),
                );
                return None;
            }
            let points = grid.num_points.unwrap_or(DEFAULT_GRID_POINTS);
            let grid = match (grid.t_min, grid.t_max) {
                (Some(lo), Some(hi)) => TimeGrid::new(lo, hi, points),
                (None, None) => TimeGrid::covering(sources, propagation, points),
                _ => {
                    report.error("mode.grid", "give both t_min and t_max, or neither");
                    return None;
                }
            };
            let grid = match grid {
                Ok(g) => g,
                Err(e) => {
                    report.error("mode.grid", e.to_string());
                    return None;
                }
            };
            for violation in grid.coverage_violations(sources, propagation) {
                if let MbcsError::GridCoverage {
                    source_index,
                    detail,
                } = violation
                {
                    report.error(
                        "mode.grid",
                        format!("does not cover the envelope of source {source_index} (sources[{source_index}]): {detail}"),
                    );
                }
            }
            let table = points
                .checked_pow(n as u32)
                .and_then(|t| t.checked_mul(1 << n))
                .unwrap_or(usize::MAX);
            if table > limits.max_sampler_table {
                report.error(
                    "mode.grid.num_points",
                    format!(
                        "a table of {points}^{n} times x 2^{n} polarizations exceeds limits.max_sampler_table = {}",
                        limits.max_sampler_table
                    ),
                );
            }
            Some(Mode::SampleMbcs {
                count: *count,
                grid,
            })
        }
        ModeSpec::Figure(FigureSpec {
            figure,
            time_range,
            time_points,
            color_range,
            color_points,
        }) => {
            if n != 2 {
                report.error(
                    "sources",
                    format!("figure mode needs exactly two sources, got {n}"),
                );
                return None;
            }
            let bandwidth = sources.profiles()[0].bandwidth();
            let default_points = if *figure == FigureKind::HomDip {
                101
            } else {
                41
            };
            let times = sweep(
                time_range.unwrap_or([-5.0, 5.0]),
                time_points.unwrap_or(default_points),
                1.0 / bandwidth,
                "mode.time_range",
                report,
            );
            let colors = if *figure == FigureKind::HomDip {
                if color_range.is_some() || color_points.is_some() {
                    report.warn("mode.color_range", "ignored by the hom_dip figure");
                }
                Vec::new()
            } else {
                let colors = sweep(
                    color_range.unwrap_or([0.0, 10.0]),
                    color_points.unwrap_or(41),
                    bandwidth,
                    "mode.color_range",
                    report,
                );
                let base = sources.profiles()[1].central_frequency();
                if colors.iter().any(|dw| base + dw < 0.0) {
                    report.error(
                        "mode.color_range",
                        "shifts the second source to a negative central frequency",
                    );
                }
                colors
            };
            Some(Mode::Figure {
                kind: *figure,
                times,
                colors,
            })
        }
    }
}

/// Runs every check; returns the experiment only when no check failed.
pub fn prepare(
    config: &ExperimentConfig,
    base_dir: &Path,
    seed_override: Option<u64>,
) -> (Option<Experiment>, Report) {
    let mut report = Report::default();
    let u = load_interferometer(&config.interferometer, base_dir, &mut report);
    let profiles = check_profiles(config, u.as_ref().map(UnitaryMatrix::dim), &mut report);
    check_limits(&config.limits, &mut report);
    let propagation = match PropagationConfig::new(config.delta_t) {
        Ok(p) => Some(p),
        Err(e) => {
            report.error("delta_t", e.to_string());
            None
        }
    };
    let (Some(u), Some(propagation)) = (u, propagation) else {
        return (None, report);
    };
    if !report.is_clean() || profiles.iter().any(Option::is_none) {
        return (None, report);
    }
    let ports = config.sources.iter().map(|s| s.port).collect();
    let sources = match SourceSet::new(ports, profiles.into_iter().flatten().collect()) {
        Ok(s) => s,
        Err(e) => {
            report.error("sources", e.to_string());
            return (None, report);
        }
    };
    let mode = check_mode(config, &u, &sources, &propagation, &mut report);
    match mode {
        Some(mode) if report.is_clean() => (
            Some(Experiment {
                u,
                sources,
                propagation,
                limits: config.limits,
                seed: seed_override.or(config.seed).unwrap_or(0),
                mode,
            }),
            report,
        ),
        _ => (None, report),
    }
}
