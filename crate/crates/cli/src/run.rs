//! Executes a checked experiment into in-memory artifacts.

use mbcs::averaged::{
    output_distribution_with_limits, p_av_distinguishable, p_av_identical, p_av_with_limits,
};
use mbcs::rates::rate;
use mbcs::sampler::{sample_mbcs_with_limits, sample_ports, write_ports_csv, write_samples_csv};
use mbcs::{MbcsError, PortSample};
use serde::Serialize;

use crate::config::{Experiment, Mode};
use crate::figures;

/// Emitted probabilities may exceed one by at most this much.
pub const PROBABILITY_SLACK: f64 = 1e-9;

/// A named output file and its contents.
pub struct Artifact {
    pub name: &'static str,
    pub bytes: Vec<u8>,
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("result serializes");
    bytes.push(b'\n');
    bytes
}

fn check_probability(p: f64, what: &str) -> Result<f64, MbcsError> {
    if (0.0..=1.0 + PROBABILITY_SLACK).contains(&p) {
        Ok(p)
    } else {
        Err(MbcsError::NumericalConsistency(format!(
            "{what} = {p} is not a probability"
        )))
    }
}

#[derive(Serialize)]
struct RateResult<'a> {
    mode: &'static str,
    ports: &'a [usize],
    times: &'a [f64],
    rate: f64,
}

#[derive(Serialize)]
struct AveragedResult<'a> {
    mode: &'static str,
    ports: &'a [usize],
    p_av: f64,
    p_identical: f64,
    p_distinguishable: f64,
}

pub fn execute(exp: &Experiment) -> Result<Vec<Artifact>, MbcsError> {
    let (u, s) = (&exp.u, &exp.sources);
    let artifacts = match &exp.mode {
        Mode::ResolvedRate(sample) => {
            let g = rate(u, sample, s, &exp.propagation)?;
            vec![Artifact {
                name: "result.json",
                bytes: json(&RateResult {
                    mode: "resolved_rate",
                    ports: sample.ports().ports(),
                    times: sample.times(),
                    rate: g,
                }),
            }]
        }
        Mode::Averaged(d) => {
            let result = AveragedResult {
                mode: "averaged",
                ports: d.ports(),
                p_av: check_probability(p_av_with_limits(u, d, s, &exp.limits)?, "p_av")?,
                p_identical: check_probability(p_av_identical(u, d, s)?, "p_identical")?,
                p_distinguishable: check_probability(
                    p_av_distinguishable(u, d, s)?,
                    "p_distinguishable",
                )?,
            };
            vec![Artifact {
                name: "result.json",
                bytes: json(&result),
            }]
        }
        Mode::Distribution(variant) => {
            let dist = output_distribution_with_limits(u, s, *variant, &exp.limits)?;
            for (d, p) in dist.entries() {
                check_probability(*p, &format!("p{:?}", d.ports()))?;
            }
            let mut bytes = dist.to_json().into_bytes();
            bytes.push(b'\n');
            vec![Artifact {
                name: "result.json",
                bytes,
            }]
        }
        Mode::SamplePorts { count, variant } => {
            let dist = output_distribution_with_limits(u, s, *variant, &exp.limits)?;
            let draws: Vec<PortSample> = sample_ports(&dist, exp.seed, *count)?;
            let mut bytes = Vec::new();
            write_ports_csv(&draws, s.len(), &mut bytes).expect("writing to memory");
            vec![Artifact {
                name: "samples.csv",
                bytes,
            }]
        }
        Mode::SampleMbcs { count, grid } => {
            let records = sample_mbcs_with_limits(
                u,
                s,
                grid,
                &exp.propagation,
                exp.seed,
                *count,
                &exp.limits,
            )?;
            let mut bytes = Vec::new();
            write_samples_csv(&records, s.len(), &mut bytes).expect("writing to memory");
            vec![Artifact {
                name: "samples.csv",
                bytes,
            }]
        }
        Mode::Figure {
            kind,
            times,
            colors,
        } => vec![Artifact {
            name: "sweep.csv",
            bytes: figures::render(*kind, u, s, times, colors)?.into_bytes(),
        }],
    };
    Ok(artifacts)
}
