//! Matrix permanents.
//!
//! Two engines are provided: [`perm_naive`] sums over every permutation and
//! is the correctness reference, [`perm_ryser`] is Ryser's inclusion-exclusion
//! formula with Gray-code subset updates, `O(2^n n)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{MbcsError, Result};
use crate::limits::{
    MAX_NAIVE_PERMANENT, MAX_RYSER_PERMANENT, RYSER_COMPENSATED_FROM, RYSER_PARALLEL_FROM,
};
use crate::permutation::Permutation;

pub type ComplexMatrix = DMatrix<Complex64>;

/// Number of Gray-code chunks used when the subset loop runs in parallel.
/// Fixed, so the reduction order does not depend on the thread count.
const RYSER_CHUNKS: u64 = 64;

fn check_operand(a: &ComplexMatrix, limit: usize, what: &'static str) -> Result<usize> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(MbcsError::Shape(format!(
            "{what}: expected a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if n > limit {
        return Err(MbcsError::Size {
            what,
            size: n,
            limit,
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(MbcsError::Invalid(format!(
            "{what}: matrix has non-finite entries"
        )));
    }
    Ok(n)
}

/// Permanent by direct summation over all `n!` permutations.
pub fn perm_naive(a: &ComplexMatrix) -> Result<Complex64> {
    let n = check_operand(a, MAX_NAIVE_PERMANENT, "perm_naive")?;
    Ok(Permutation::all(n)
        .map(|sigma| {
            (0..n).fold(Complex64::new(1.0, 0.0), |acc, i| {
                acc * a[(i, sigma.apply(i))]
            })
        })
        .sum())
}

/// Permanent by Ryser's formula with Gray-code ordering of the column subsets.
pub fn perm_ryser(a: &ComplexMatrix) -> Result<Complex64> {
    let n = check_operand(a, MAX_RYSER_PERMANENT, "perm_ryser")?;
    Ok(ryser(a, n))
}

/// Permanent of a real matrix with nonnegative entries.
pub fn perm_nonnegative(a: &DMatrix<f64>) -> Result<f64> {
    if a.iter().any(|&x| x < 0.0) {
        return Err(MbcsError::Invalid(
            "perm_nonnegative: negative entry".into(),
        ));
    }
    let complex = a.map(|x| Complex64::new(x, 0.0));
    Ok(perm_ryser(&complex)?.re)
}

fn ryser(a: &ComplexMatrix, n: usize) -> Complex64 {
    if n == 1 {
        return a[(0, 0)];
    }
    let total: u64 = 1 << n;
    let compensated = n >= RYSER_COMPENSATED_FROM;
    let sum = if n >= RYSER_PARALLEL_FROM {
        let chunk = total.div_ceil(RYSER_CHUNKS);
        let partials: Vec<Accumulator> = (0..RYSER_CHUNKS)
            .into_par_iter()
            .map(|c| {
                let start = (c * chunk).max(1);
                let end = ((c + 1) * chunk).min(total);
                ryser_range(a, n, start, end, compensated)
            })
            .collect();
        let mut acc = Accumulator::new(compensated);
        for p in partials {
            acc.add(p.value());
        }
        acc.value()
    } else {
        ryser_range(a, n, 1, total, compensated).value()
    };
    if n % 2 == 1 {
        -sum
    } else {
        sum
    }
}

/// Sums `(-1)^|S| prod_i rowsum_i(S)` over the Gray-code steps `start..end`,
/// where step `k` visits the column subset `k ^ (k >> 1)`.
fn ryser_range(
    a: &ComplexMatrix,
    n: usize,
    start: u64,
    end: u64,
    compensated: bool,
) -> Accumulator {
    let mut acc = Accumulator::new(compensated);
    if start >= end {
        return acc;
    }
    let previous = (start - 1) ^ ((start - 1) >> 1);
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    for j in (0..n).filter(|&j| previous >> j & 1 == 1) {
        for (i, s) in row_sums.iter_mut().enumerate() {
            *s += a[(i, j)];
        }
    }
    let mut subset = previous;
    for k in start..end {
        let j = k.trailing_zeros() as usize;
        let bit = 1u64 << j;
        subset ^= bit;
        if subset & bit != 0 {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += a[(i, j)];
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= a[(i, j)];
            }
        }
        let product = row_sums
            .iter()
            .fold(Complex64::new(1.0, 0.0), |p, &s| p * s);
        if subset.count_ones() % 2 == 1 {
            acc.add(-product);
        } else {
            acc.add(product);
        }
    }
    acc
}

/// Plain or Neumaier-compensated complex summation.
#[derive(Clone, Copy)]
struct Accumulator {
    sum: Complex64,
    compensation: Complex64,
    compensated: bool,
}

impl Accumulator {
    fn new(compensated: bool) -> Self {
        Self {
            sum: Complex64::new(0.0, 0.0),
            compensation: Complex64::new(0.0, 0.0),
            compensated,
        }
    }

    fn add(&mut self, x: Complex64) {
        if !self.compensated {
            self.sum += x;
            return;
        }
        let re = neumaier(self.sum.re, x.re, &mut self.compensation.re);
        let im = neumaier(self.sum.im, x.im, &mut self.compensation.im);
        self.sum = Complex64::new(re, im);
    }

    fn value(&self) -> Complex64 {
        self.sum + self.compensation
    }
}

fn neumaier(sum: f64, x: f64, compensation: &mut f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *compensation += (sum - t) + x;
    } else {
        *compensation += (x - t) + sum;
    }
    t
}
