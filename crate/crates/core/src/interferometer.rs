//! Interferometer unitaries, input/output port bookkeeping and the scattering
//! submatrices they induce.
//!
//! Ports are numbered from 1 to `M` everywhere in the public API.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{MbcsError, Result};
use crate::permanent::ComplexMatrix;
use crate::spectra::SpectralProfile;

/// Frobenius-norm tolerance on `U U† - 1`.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// An `M x M` unitary describing a passive linear interferometer.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    matrix: ComplexMatrix,
}

impl UnitaryMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let m = matrix.nrows();
        if m == 0 || matrix.ncols() != m {
            return Err(MbcsError::Shape(format!(
                "unitary must be a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = unitarity_defect(&matrix);
        if defect.is_nan() || defect > UNITARITY_TOLERANCE {
            return Err(MbcsError::Invalid(format!(
                "matrix is not unitary: |U U† - 1|_F = {defect:e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(m, m),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Transition amplitude from input port `s` to output port `d` (both 1-based).
    pub fn entry(&self, d: usize, s: usize) -> Complex64 {
        self.matrix[(d - 1, s - 1)]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&UnitaryJson::from(self)).expect("unitary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: UnitaryJson =
            serde_json::from_str(text).map_err(|e| MbcsError::Serialization(e.to_string()))?;
        doc.try_into()
    }
}

/// `|U U† - 1|_F`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let m = u.nrows();
    (u * u.adjoint() - ComplexMatrix::identity(m, m)).norm()
}

/// On-disk form: `{"m": M, "re": [[..]], "im": [[..]]}`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitaryJson {
    pub m: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&UnitaryMatrix> for UnitaryJson {
    fn from(u: &UnitaryMatrix) -> Self {
        let m = u.dim();
        let rows = |f: fn(&Complex64) -> f64| {
            (0..m)
                .map(|r| (0..m).map(|c| f(&u.matrix[(r, c)])).collect())
                .collect()
        };
        Self {
            m,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl TryFrom<UnitaryJson> for UnitaryMatrix {
    type Error = MbcsError;

    fn try_from(doc: UnitaryJson) -> Result<Self> {
        let m = doc.m;
        let well_formed = doc.re.len() == m
            && doc.im.len() == m
            && doc.re.iter().chain(&doc.im).all(|row| row.len() == m);
        if !well_formed {
            return Err(MbcsError::Shape(format!(
                "unitary document declares m = {m} but its re/im arrays are not {m}x{m}"
            )));
        }
        UnitaryMatrix::new(ComplexMatrix::from_fn(m, m, |r, c| {
            Complex64::new(doc.re[r][c], doc.im[r][c])
        }))
    }
}

/// Draws an `M x M` unitary from the Haar measure.
///
/// A complex Ginibre matrix (i.i.d. standard complex normal entries, drawn
/// from ChaCha8 seeded with `seed`) is QR-factorized and each column of `Q`
/// is multiplied by the phase of the matching diagonal entry of `R`.
pub fn haar_random(m: usize, seed: u64) -> UnitaryMatrix {
    assert!(m >= 1, "haar_random needs M >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let ginibre = ComplexMatrix::from_fn(m, m, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * scale, im * scale)
    });
    let qr = ginibre.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix { matrix: q }
}

/// Symmetric 50/50 beam splitter `(1/√2) [[1, i], [i, 1]]`.
pub fn beam_splitter_50_50() -> UnitaryMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (r, t) = (Complex64::new(h, 0.0), Complex64::new(0.0, h));
    UnitaryMatrix {
        matrix: ComplexMatrix::from_row_slice(2, 2, &[r, t, t, r]),
    }
}

/// Occupied input ports and the photons injected into them.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSet {
    ports: Vec<usize>,
    profiles: Vec<SpectralProfile>,
}

impl SourceSet {
    pub fn new(ports: Vec<usize>, profiles: Vec<SpectralProfile>) -> Result<Self> {
        if ports.is_empty() {
            return Err(MbcsError::Invalid(
                "a source set needs at least one photon".into(),
            ));
        }
        if ports.len() != profiles.len() {
            return Err(MbcsError::Shape(format!(
                "{} source ports but {} spectral profiles",
                ports.len(),
                profiles.len()
            )));
        }
        if ports.contains(&0) {
            return Err(MbcsError::Invalid(
                "source ports are numbered from 1".into(),
            ));
        }
        for (k, p) in ports.iter().enumerate() {
            if ports[..k].contains(p) {
                return Err(MbcsError::Invalid(format!(
                    "source port {p} occupied twice"
                )));
            }
        }
        Ok(Self { ports, profiles })
    }

    pub fn len(&self) -> usize {
        self.ports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ports.is_empty()
    }

    pub fn ports(&self) -> &[usize] {
        &self.ports
    }

    pub fn profiles(&self) -> &[SpectralProfile] {
        &self.profiles
    }

    /// Checks that every port exists on `u` and that `N <= M`.
    pub fn check_fits(&self, u: &UnitaryMatrix) -> Result<()> {
        let m = u.dim();
        if self.len() > m {
            return Err(MbcsError::Size {
                what: "photons in an M-port interferometer",
                size: self.len(),
                limit: m,
            });
        }
        check_ports(&self.ports, m, "source port")
    }
}

fn check_ports(ports: &[usize], m: usize, what: &'static str) -> Result<()> {
    match ports.iter().find(|&&p| p == 0 || p > m) {
        Some(&index) => Err(MbcsError::Range {
            what,
            index,
            max: m,
        }),
        None => Ok(()),
    }
}

/// Multiset of output ports, held in canonical (non-decreasing) order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PortSample(Vec<usize>);

impl PortSample {
    /// Accepts ports already in canonical order.
    pub fn new(ports: Vec<usize>) -> Result<Self> {
        if ports.is_empty() {
            return Err(MbcsError::Invalid(
                "a port sample needs at least one port".into(),
            ));
        }
        if ports.contains(&0) {
            return Err(MbcsError::Invalid(
                "output ports are numbered from 1".into(),
            ));
        }
        if ports.windows(2).any(|w| w[0] > w[1]) {
            return Err(MbcsError::Invalid(format!(
                "port sample {ports:?} is not in canonical non-decreasing order"
            )));
        }
        Ok(Self(ports))
    }

    /// Sorts the ports into canonical order.
    pub fn from_unsorted(mut ports: Vec<usize>) -> Result<Self> {
        ports.sort_unstable();
        Self::new(ports)
    }

    pub fn ports(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(port, n_d)` for every distinct port, in port order.
    pub fn multiplicities(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &p in &self.0 {
            match out.last_mut() {
                Some((q, n)) if *q == p => *n += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }

    /// `∏_d n_d!`.
    pub fn bunching_factor(&self) -> f64 {
        self.multiplicities()
            .iter()
            .map(|&(_, n)| (1..=n).map(|k| k as f64).product::<f64>())
            .product()
    }

    pub fn is_collision_free(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1])
    }

    pub fn check_fits(&self, u: &UnitaryMatrix) -> Result<()> {
        check_ports(&self.0, u.dim(), "output port")
    }
}

impl TryFrom<Vec<usize>> for PortSample {
    type Error = MbcsError;

    fn try_from(ports: Vec<usize>) -> Result<Self> {
        Self::new(ports)
    }
}

impl From<PortSample> for Vec<usize> {
    fn from(p: PortSample) -> Self {
        p.0
    }
}

/// `[U_{d_j, s_i}]`, with rows repeated for bunched output ports.
pub fn submatrix(u: &UnitaryMatrix, d: &PortSample, s: &SourceSet) -> Result<ComplexMatrix> {
    submatrix_of_ports(u, d.ports(), s.ports())
}

/// [`submatrix`] for raw 1-based row and column port lists.
pub fn submatrix_of_ports(
    u: &UnitaryMatrix,
    rows: &[usize],
    cols: &[usize],
) -> Result<ComplexMatrix> {
    if rows.len() != cols.len() {
        return Err(MbcsError::Shape(format!(
            "{} detected ports for {} sources",
            rows.len(),
            cols.len()
        )));
    }
    check_ports(rows, u.dim(), "output port")?;
    check_ports(cols, u.dim(), "source port")?;
    Ok(DMatrix::from_fn(rows.len(), cols.len(), |j, i| {
        u.entry(rows[j], cols[i])
    }))
}

/// Number of port samples of size `n` over `m` ports (saturating).
pub fn count_port_samples(m: usize, n: usize, allow_bunching: bool) -> usize {
    let (top, k) = if allow_bunching {
        (m + n - 1, n)
    } else {
        (m, n)
    };
    if k > top {
        return 0;
    }
    let k = k.min(top - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (top - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Every port sample of size `n` over `m` ports, in canonical (lexicographic) order.
///
/// With `allow_bunching` these are all multisets; otherwise all `n`-subsets.
pub fn enumerate_port_samples(m: usize, n: usize, allow_bunching: bool) -> Result<Vec<PortSample>> {
    if m == 0 || n == 0 {
        return Err(MbcsError::Invalid(
            "need at least one port and one photon".into(),
        ));
    }
    if !allow_bunching && n > m {
        return Err(MbcsError::Size {
            what: "photons without bunching",
            size: n,
            limit: m,
        });
    }
    let step = usize::from(!allow_bunching);
    let mut out = Vec::with_capacity(count_port_samples(m, n, allow_bunching));
    let mut current: Vec<usize> = (0..n).map(|k| 1 + k * step).collect();
    loop {
        out.push(PortSample(current.clone()));
        // Rightmost position that can still be incremented.
        let Some(pos) = (0..n).rev().find(|&k| current[k] < m - (n - 1 - k) * step) else {
            break;
        };
        current[pos] += 1;
        for k in pos + 1..n {
            current[k] = current[k - 1] + step;
        }
    }
    Ok(out)
}
