//! Gauss–Legendre quadrature helpers: adaptive 1-D integration of complex
//! integrands and composite rules for tensor-product grids.

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Degree of the panel rule used by [`integrate_adaptive`].
const ADAPTIVE_DEGREE: usize = 20;
const MAX_BISECTION_DEPTH: u32 = 40;

fn rule(degree: usize) -> GaussLegendre {
    GaussLegendre::new(
        degree
            .try_into()
            .expect("quadrature degree must be positive"),
    )
}

/// Nodes and weights of a fixed rule on an arbitrary interval.
#[derive(Debug, Clone, PartialEq)]
pub struct NodesWeights {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NodesWeights {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Composite Gauss–Legendre rule: `panels` equal sub-intervals of `[a, b]`,
/// each carrying a `degree`-point rule.
pub fn composite_rule(a: f64, b: f64, panels: usize, degree: usize) -> NodesWeights {
    let base = rule(degree);
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * degree);
    let mut weights = Vec::with_capacity(panels * degree);
    for p in 0..panels {
        let lo = a + width * p as f64;
        let half = 0.5 * width;
        let mid = lo + half;
        for (x, w) in base.iter() {
            nodes.push(mid + half * x);
            weights.push(half * w);
        }
    }
    NodesWeights { nodes, weights }
}

fn panel(base: &GaussLegendre, a: f64, b: f64, f: &mut impl FnMut(f64) -> Complex64) -> Complex64 {
    let half = 0.5 * (b - a);
    let mid = a + half;
    base.iter()
        .map(|(x, w)| f(mid + half * x) * *w)
        .sum::<Complex64>()
        * half
}

/// Adaptive Gauss–Legendre integration of a complex function over `[a, b]`.
///
/// Intervals are bisected until the panel estimate and the sum of its two
/// halves agree within the interval's share of `abs_tol`.
pub fn integrate_adaptive(
    a: f64,
    b: f64,
    abs_tol: f64,
    mut f: impl FnMut(f64) -> Complex64,
) -> Complex64 {
    let base = rule(ADAPTIVE_DEGREE);
    let whole = panel(&base, a, b, &mut f);
    refine(&base, a, b, whole, abs_tol, 0, &mut f)
}

fn refine(
    base: &GaussLegendre,
    a: f64,
    b: f64,
    whole: Complex64,
    tol: f64,
    depth: u32,
    f: &mut impl FnMut(f64) -> Complex64,
) -> Complex64 {
    let mid = 0.5 * (a + b);
    let left = panel(base, a, mid, f);
    let right = panel(base, mid, b, f);
    let split = left + right;
    if (split - whole).norm() <= tol || depth >= MAX_BISECTION_DEPTH {
        return split;
    }
    refine(base, a, mid, left, 0.5 * tol, depth + 1, f)
        + refine(base, mid, b, right, 0.5 * tol, depth + 1, f)
}

/// Per-axis rule used by the tensor-product time integrals.
///
/// Each axis spans the union of all photon envelopes at `±half_width_sigmas`
/// temporal standard deviations and is covered by `nodes` Gauss–Legendre
/// points, split into `panels` equal panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub nodes: usize,
    pub panels: usize,
    pub half_width_sigmas: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 96,
            panels: 4,
            half_width_sigmas: 10.0,
        }
    }
}
