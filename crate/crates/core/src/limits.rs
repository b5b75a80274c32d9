//! Size guards for the exponential-cost kernels.
//!
//! The free constants are the defaults; [`Limits`] carries the values that
//! callers (and the CLI config) may override.

use serde::{Deserialize, Serialize};

/// Largest matrix accepted by the factorial-time reference permanent.
pub const MAX_NAIVE_PERMANENT: usize = 10;
/// Largest matrix accepted by the Ryser engine.
pub const MAX_RYSER_PERMANENT: usize = 30;
/// From this size on, Ryser accumulates with compensated summation.
pub const RYSER_COMPENSATED_FROM: usize = 20;
/// From this size on, the Ryser subset loop is split across worker threads.
pub const RYSER_PARALLEL_FROM: usize = 16;
/// Largest photon number for the explicit double-sum rate oracle.
pub const MAX_DOUBLE_SUM_PHOTONS: usize = 6;
/// Largest photon number for the tensor-quadrature averaged probability.
pub const MAX_NUMERIC_AVERAGE_PHOTONS: usize = 3;
/// Largest photon number for the two-stage time-resolved sampler.
pub const MAX_MBCS_SAMPLER_PHOTONS: usize = 3;

/// Overridable limits for the averaged-probability and enumeration paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    /// Largest photon number for the sum over permutations in the averaged probability.
    pub max_averaged_photons: usize,
    /// Largest number of port samples enumerated for an output distribution.
    pub max_enumerated_samples: usize,
    /// Largest conditional table (grid points^N times 2^N) built by the time-resolved sampler.
    pub max_sampler_table: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_averaged_photons: 8,
            max_enumerated_samples: 100_000,
            max_sampler_table: 1 << 24,
        }
    }
}
