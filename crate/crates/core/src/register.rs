//! Dense state vectors over registers of d-level sites.
//!
//! Amplitudes are stored in mixed-radix order with site 0 as the most
//! significant digit: a basis state with digits (a_0, ..., a_{n-1}) sits at
//! index sum a_i * d^(n-1-i). A register may carry a probe site; by
//! convention the probe is site 0, so the amplitudes belonging to one probe
//! level form one contiguous block and probe extraction never strides.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tol;

/// Hard cap on dense register size: d^n_sites may not exceed 2^22 amplitudes.
pub const MAX_DENSE_AMPLITUDES: usize = 1 << 22;

/// k-th power of the primitive d-th root of unity exp(i 2 pi / d).
///
/// Negative exponents are reduced mod d. Quarter-turn multiples come back as
/// exact ±1 / ±i, which keeps the d = 2 and d = 4 gate paths free of trig
/// rounding; other angles go through cos/sin.
pub fn root_of_unity(d: usize, k: i64) -> Complex64 {
    debug_assert!(d >= 2);
    let k = k.rem_euclid(d as i64) as usize;
    if (4 * k) % d == 0 {
        match (4 * k / d) % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        let theta = 2.0 * std::f64::consts::PI * (k as f64) / (d as f64);
        Complex64::new(theta.cos(), theta.sin())
    }
}

/// Measurement / preparation axes for a single site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// A single-site basis ket labeled by axis and level.
///
/// z kets are the computational levels. x kets are the Fourier basis
/// |n^x> = d^(-1/2) sum_a q^(an) |a^z> with q = exp(i 2 pi / d); for d = 2
/// this gives |0^x> = (|0>+|1>)/sqrt(2) and |1^x> = (|0>-|1>)/sqrt(2).
/// y kets are defined for qubits only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisKet {
    pub axis: Axis,
    pub label: usize,
}

impl AxisKet {
    pub fn new(axis: Axis, label: usize) -> Self {
        AxisKet { axis, label }
    }

    /// Dense d-vector for this ket.
    pub fn vector(&self, d: usize) -> Result<Vec<Complex64>> {
        if d < 2 {
            return Err(Error::LevelCountTooSmall(d));
        }
        if self.label >= d {
            return Err(Error::LabelOutOfRange { label: self.label, d });
        }
        match self.axis {
            Axis::Z => {
                let mut v = vec![Complex64::new(0.0, 0.0); d];
                v[self.label] = Complex64::new(1.0, 0.0);
                Ok(v)
            }
            Axis::X => {
                let scale = 1.0 / (d as f64).sqrt();
                Ok((0..d)
                    .map(|a| root_of_unity(d, (a * self.label) as i64) * scale)
                    .collect())
            }
            Axis::Y => {
                if d != 2 {
                    return Err(Error::YAxisRequiresQubits(d));
                }
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let sign = if self.label == 0 { 1.0 } else { -1.0 };
                Ok(vec![Complex64::new(s, 0.0), Complex64::new(0.0, sign * s)])
            }
        }
    }
}

/// Discrete Fourier matrix F with F[a][n] = q^(an)/sqrt(d), column n being
/// the x ket |n^x>. Applying F† to a state expresses it in the x basis.
pub fn fourier_matrix(d: usize) -> Vec<Complex64> {
    let scale = 1.0 / (d as f64).sqrt();
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for a in 0..d {
        for n in 0..d {
            m[a * d + n] = root_of_unity(d, (a * n) as i64) * scale;
        }
    }
    m
}

/// Conjugate transpose of a row-major square matrix.
pub fn adjoint(m: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[j * dim + i] = m[i * dim + j].conj();
        }
    }
    out
}

/// Max |M†M - I| entry; zero for an exactly unitary matrix.
pub fn unitarity_defect(m: &[Complex64], dim: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                acc += m[k * dim + i].conj() * m[k * dim + j];
            }
            if i == j {
                acc -= Complex64::new(1.0, 0.0);
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

/// Geometry of a register: level count, site count, probe flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterShape {
    d: usize,
    n_sites: usize,
    probe: bool,
    dim: usize,
}

impl RegisterShape {
    /// Validates d >= 2, n_sites >= 1, and the dense amplitude cap.
    pub fn new(d: usize, n_sites: usize, probe: bool) -> Result<Self> {
        if d < 2 {
            return Err(Error::LevelCountTooSmall(d));
        }
        if n_sites == 0 {
            return Err(Error::EmptyRegister);
        }
        let mut dim: usize = 1;
        for _ in 0..n_sites {
            dim = dim
                .checked_mul(d)
                .filter(|&v| v <= MAX_DENSE_AMPLITUDES)
                .ok_or(Error::RegisterTooLarge {
                    d,
                    n_sites,
                    cap: MAX_DENSE_AMPLITUDES,
                })?;
        }
        Ok(RegisterShape {
            d,
            n_sites,
            probe,
            dim,
        })
    }

    /// Probe-less register of n system sites.
    pub fn system(d: usize, n: usize) -> Result<Self> {
        Self::new(d, n, false)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn has_probe(&self) -> bool {
        self.probe
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of system (non-probe) sites.
    pub fn n_system(&self) -> usize {
        self.n_sites - usize::from(self.probe)
    }

    /// Site indices excluding the probe.
    pub fn system_sites(&self) -> std::ops::Range<usize> {
        usize::from(self.probe)..self.n_sites
    }

    /// Stride of one level step at `site`: d^(n_sites - 1 - site).
    pub fn stride(&self, site: usize) -> Result<usize> {
        self.check_site(site)?;
        Ok(self.d.pow((self.n_sites - 1 - site) as u32))
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites,
            });
        }
        Ok(())
    }

    /// Shape with a probe site prepended at position 0.
    pub fn with_probe(&self) -> Result<Self> {
        if self.probe {
            return Err(Error::ProbeAlreadyPresent);
        }
        Self::new(self.d, self.n_sites + 1, true)
    }

    /// Shape with site 0 removed; the result never carries a probe flag.
    pub fn without_site0(&self) -> Result<Self> {
        if self.n_sites == 1 {
            return Err(Error::EmptyRegister);
        }
        Self::new(self.d, self.n_sites - 1, false)
    }

    /// Digit of `index` at `site` under the site-0-most-significant layout.
    pub fn digit_at(&self, index: usize, site: usize) -> usize {
        (index / self.d.pow((self.n_sites - 1 - site) as u32)) % self.d
    }

    /// Mixed-radix encoding of per-site digits.
    pub fn index_of(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.n_sites {
            return Err(Error::AmplitudeLengthMismatch {
                expected: self.n_sites,
                got: digits.len(),
            });
        }
        let mut idx = 0;
        for &a in digits {
            if a >= self.d {
                return Err(Error::DigitOutOfRange { digit: a, d: self.d });
            }
            idx = idx * self.d + a;
        }
        Ok(idx)
    }

    pub fn digits_of(&self, index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.n_sites];
        let mut rest = index;
        for site in (0..self.n_sites).rev() {
            digits[site] = rest % self.d;
            rest /= self.d;
        }
        digits
    }
}

/// One factor of a product state: a named axis ket or an explicit vector.
#[derive(Debug, Clone)]
pub enum SiteFactor {
    Ket(AxisKet),
    Vector(Vec<Complex64>),
}

impl SiteFactor {
    fn vector(&self, d: usize) -> Result<Vec<Complex64>> {
        match self {
            SiteFactor::Ket(k) => k.vector(d),
            SiteFactor::Vector(v) => {
                if v.len() != d {
                    return Err(Error::AmplitudeLengthMismatch {
                        expected: d,
                        got: v.len(),
                    });
                }
                let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > tol::NORM_CONSTRUCT {
                    return Err(Error::NotNormalized {
                        norm,
                        tol: tol::NORM_CONSTRUCT,
                    });
                }
                Ok(v.clone())
            }
        }
    }
}

/// Dense normalized state vector over a [`RegisterShape`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuditState {
    shape: RegisterShape,
    amps: Vec<Complex64>,
}

impl QuditState {
    /// Builds a state from raw amplitudes; the norm must already be 1
    /// within [`tol::NORM_CONSTRUCT`].
    pub fn from_amplitudes(shape: RegisterShape, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != shape.dim() {
            return Err(Error::AmplitudeLengthMismatch {
                expected: shape.dim(),
                got: amps.len(),
            });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > tol::NORM_CONSTRUCT {
            return Err(Error::NotNormalized {
                norm,
                tol: tol::NORM_CONSTRUCT,
            });
        }
        Ok(QuditState { shape, amps })
    }

    pub(crate) fn from_amplitudes_unchecked(shape: RegisterShape, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), shape.dim());
        QuditState { shape, amps }
    }

    /// Computational basis state |a_0 a_1 ... a_{n-1}>.
    pub fn basis(shape: RegisterShape, digits: &[usize]) -> Result<Self> {
        let idx = shape.index_of(digits)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); shape.dim()];
        amps[idx] = Complex64::new(1.0, 0.0);
        Ok(QuditState { shape, amps })
    }

    /// Product state from one factor per site.
    pub fn product(shape: RegisterShape, factors: &[SiteFactor]) -> Result<Self> {
        if factors.len() != shape.n_sites() {
            return Err(Error::AmplitudeLengthMismatch {
                expected: shape.n_sites(),
                got: factors.len(),
            });
        }
        let d = shape.d();
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for factor in factors {
            let v = factor.vector(d)?;
            let mut next = Vec::with_capacity(amps.len() * d);
            for a in &amps {
                for b in &v {
                    next.push(a * b);
                }
            }
            amps = next;
        }
        Ok(QuditState { shape, amps })
    }

    /// Uniform product of the same axis ket on every site.
    pub fn uniform_product(shape: RegisterShape, ket: AxisKet) -> Result<Self> {
        let factors = vec![SiteFactor::Ket(ket); shape.n_sites()];
        Self::product(shape, &factors)
    }

    /// Haar-like random state: i.i.d. complex Gaussian amplitudes,
    /// normalized. Deterministic per seed (ChaCha8 stream).
    pub fn random(shape: RegisterShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let amps: Vec<Complex64> = (0..shape.dim())
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im)
                })
                .collect();
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                let amps = amps.into_iter().map(|a| a / norm).collect();
                return QuditState { shape, amps };
            }
        }
    }

    pub fn shape(&self) -> RegisterShape {
        self.shape
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// <self|other>; shapes must match.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch {
                a: self.shape.dim(),
                b: other.shape.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |<self|other>|^2.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Max amplitude difference against `other`, component-wise.
    pub fn max_amp_diff(&self, other: &Self) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch {
                a: self.shape.dim(),
                b: other.shape.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Applies a d x d unitary to one site. The matrix is validated against
    /// [`tol::UNITARITY`] before anything is touched.
    pub fn apply_single_site(&self, site: usize, m: &[Complex64]) -> Result<Self> {
        let d = self.shape.d();
        if m.len() != d * d {
            return Err(Error::AmplitudeLengthMismatch {
                expected: d * d,
                got: m.len(),
            });
        }
        let defect = unitarity_defect(m, d);
        if defect > tol::UNITARITY {
            return Err(Error::NotUnitary { defect });
        }
        let stride = self.shape.stride(site)?;
        let mut amps = self.amps.clone();
        let block = stride * d;
        let mut scratch = vec![Complex64::new(0.0, 0.0); d];
        for base in (0..self.shape.dim()).step_by(block) {
            for lo in 0..stride {
                for (a, s) in scratch.iter_mut().enumerate() {
                    *s = amps[base + a * stride + lo];
                }
                for a in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (b, s) in scratch.iter().enumerate() {
                        acc += m[a * d + b] * s;
                    }
                    amps[base + a * stride + lo] = acc;
                }
            }
        }
        Ok(QuditState {
            shape: self.shape,
            amps,
        })
    }

    /// Tensor a probe ket onto the front of the register (new site 0).
    pub fn adjoin_probe(&self, probe: &[Complex64]) -> Result<Self> {
        let shape = self.shape.with_probe()?;
        let d = self.shape.d();
        if probe.len() != d {
            return Err(Error::AmplitudeLengthMismatch {
                expected: d,
                got: probe.len(),
            });
        }
        let norm = probe.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > tol::NORM_CONSTRUCT {
            return Err(Error::NotNormalized {
                norm,
                tol: tol::NORM_CONSTRUCT,
            });
        }
        let mut amps = Vec::with_capacity(shape.dim());
        for p in probe {
            amps.extend(self.amps.iter().map(|a| p * a));
        }
        Ok(QuditState { shape, amps })
    }

    /// Probability of each site-0 level in the computational basis.
    pub fn site0_probabilities(&self) -> Vec<f64> {
        let d = self.shape.d();
        let block = self.shape.dim() / d;
        (0..d)
            .map(|a| {
                self.amps[a * block..(a + 1) * block]
                    .iter()
                    .map(|c| c.norm_sqr())
                    .sum()
            })
            .collect()
    }

    /// Projects site 0 onto computational level `label` and drops the site.
    ///
    /// Returns the outcome probability and the normalized remainder, or
    /// `None` when the probability is below [`tol::PRUNE_PROBABILITY`].
    pub fn project_site0(&self, label: usize) -> Result<(f64, Option<Self>)> {
        let d = self.shape.d();
        if label >= d {
            return Err(Error::DigitOutOfRange { digit: label, d });
        }
        let rest_shape = self.shape.without_site0()?;
        let block = self.shape.dim() / d;
        let slice = &self.amps[label * block..(label + 1) * block];
        let raw: f64 = slice.iter().map(|c| c.norm_sqr()).sum();
        let prob = raw.clamp(0.0, 1.0);
        if raw < tol::PRUNE_PROBABILITY {
            return Ok((prob, None));
        }
        let scale = 1.0 / raw.sqrt();
        let amps = slice.iter().map(|c| c * scale).collect();
        Ok((prob, Some(QuditState {
            shape: rest_shape,
            amps,
        })))
    }

    /// Samples a full computational-basis index from the Born distribution.
    pub fn sample_basis<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (idx, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p > 0.0 {
                last_nonzero = idx;
            }
            acc += p;
            if u < acc {
                return idx;
            }
        }
        last_nonzero
    }

    /// Reduced density matrix over a strictly increasing site subset.
    ///
    /// Within the subset the earliest site is the most significant digit,
    /// matching the register convention.
    pub fn reduced_density(&self, sites: &[usize]) -> Result<DensityMatrix> {
        if sites.is_empty() || sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSupport);
        }
        for &s in sites {
            self.shape.check_site(s)?;
        }
        let d = self.shape.d();
        let m = d.pow(sites.len() as u32);
        let rest_dim = self.shape.dim() / m;
        // regroup amplitudes as [rest][sub] so each rest slice contributes
        // one outer product
        let mut grouped = vec![Complex64::new(0.0, 0.0); self.shape.dim()];
        let in_subset: Vec<bool> = (0..self.shape.n_sites())
            .map(|s| sites.binary_search(&s).is_ok())
            .collect();
        for (idx, &a) in self.amps.iter().enumerate() {
            let mut sub = 0;
            let mut rest = 0;
            for site in 0..self.shape.n_sites() {
                let digit = self.shape.digit_at(idx, site);
                if in_subset[site] {
                    sub = sub * d + digit;
                } else {
                    rest = rest * d + digit;
                }
            }
            grouped[rest * m + sub] = a;
        }
        let mut data = vec![Complex64::new(0.0, 0.0); m * m];
        for r in 0..rest_dim {
            let slice = &grouped[r * m..(r + 1) * m];
            for i in 0..m {
                if slice[i] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..m {
                    data[i * m + j] += slice[i] * slice[j].conj();
                }
            }
        }
        Ok(DensityMatrix { dim: m, data })
    }
}

/// Small dense density matrix produced by [`QuditState::reduced_density`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub(crate) fn from_parts(dim: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        DensityMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    pub fn max_abs_offdiag(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    worst = worst.max(self.entry(i, j).norm());
                }
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                a: self.dim,
                b: other.dim,
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}
