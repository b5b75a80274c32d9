//! Multi-boson correlation sampling.
//!
//! Single photons with Gaussian spectra enter a passive linear interferometer
//! described by an `M x M` unitary. This crate computes
//!
//! * the time- and polarization-resolved N-photon detection rate
//!   `G = |perm T|²` ([`rates`]),
//! * the detection probability averaged over times and polarizations,
//!   `P_av = (∏ n_d!)⁻¹ Σ_ρ f_ρ perm A_ρ` ([`averaged`]),
//! * samples from both distributions ([`sampler`]),
//!
//! together with the overlap quantities ([`spectra`]), the permanent engines
//! ([`permanent`]) and the port bookkeeping ([`interferometer`]) they rest on.

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod averaged;
pub mod error;
pub mod interferometer;
pub mod limits;
pub mod permanent;
pub mod permutation;
pub mod quadrature;
pub mod rates;
pub mod sampler;
pub mod spectra;

pub use averaged::{
    output_distribution, p_av, p_av_distinguishable, p_av_identical, p_av_numeric,
    DistributionMode, OutputDistribution,
};
pub use error::{MbcsError, Result};
pub use interferometer::{
    beam_splitter_50_50, enumerate_port_samples, haar_random, submatrix, PortSample, SourceSet,
    UnitaryMatrix,
};
pub use limits::Limits;
pub use permanent::{perm_naive, perm_ryser, ComplexMatrix};
pub use permutation::Permutation;
pub use rates::{rate, DetectionSample};
pub use sampler::{sample_mbcs, sample_ports, BasisLabel, SampleRecord, TimeGrid};
pub use spectra::{PolarizationVector, PropagationConfig, SpectralProfile};
