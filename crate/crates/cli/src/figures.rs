//! Sweep data behind the standard figures, as CSV.

use std::fmt::Write;

use mbcs::averaged::p_av;
use mbcs::spectra::{distinguishability_g, overlap_modulus_a};
use mbcs::{MbcsError, PortSample, SourceSet, UnitaryMatrix};

use crate::config::FigureKind;
use crate::run::PROBABILITY_SLACK;

/// Second source moved by `dt` in emission time and `dw` in color.
fn shifted(s: &SourceSet, dt: f64, dw: f64) -> Result<SourceSet, MbcsError> {
    let first = &s.profiles()[0];
    let second = s.profiles()[1]
        .with_emission_time(first.emission_time() + dt)
        .with_central_frequency(s.profiles()[1].central_frequency() + dw);
    SourceSet::new(s.ports().to_vec(), vec![*first, second])
}

pub fn render(
    kind: FigureKind,
    u: &UnitaryMatrix,
    s: &SourceSet,
    times: &[f64],
    colors: &[f64],
) -> Result<String, MbcsError> {
    let mut out = String::new();
    match kind {
        FigureKind::HomDip => {
            let coincidence = PortSample::from_unsorted(s.ports().to_vec())?;
            out.push_str("tau,p_coincidence\n");
            for &tau in times {
                let p = p_av(u, &coincidence, &shifted(s, tau, 0.0)?)?;
                if p > 1.0 + PROBABILITY_SLACK {
                    return Err(MbcsError::NumericalConsistency(format!(
                        "coincidence probability {p} at tau = {tau}"
                    )));
                }
                writeln!(out, "{tau},{p}").unwrap();
            }
        }
        FigureKind::OverlapA | FigureKind::OverlapG => {
            let column = if kind == FigureKind::OverlapA {
                "a"
            } else {
                "g_abs"
            };
            writeln!(out, "delta_t0,delta_omega0,{column}").unwrap();
            for &dt in times {
                for &dw in colors {
                    let pair = shifted(s, dt, dw)?;
                    let (p, q) = (&pair.profiles()[0], &pair.profiles()[1]);
                    let value = if kind == FigureKind::OverlapA {
                        overlap_modulus_a(p, q)
                    } else {
                        distinguishability_g(p, q).norm()
                    };
                    writeln!(out, "{dt},{dw},{value}").unwrap();
                }
            }
        }
    }
    Ok(out)
}
