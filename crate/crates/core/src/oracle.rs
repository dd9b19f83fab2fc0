//! Brute-force reference route: dense operators, spectral projectors, and a
//! gate-by-gate C-NOT counting circuit.
//!
//! Everything here is built from explicit Kronecker products and naive
//! linear algebra on top of the register layout. No gate-application code
//! is shared with the interaction-based measurement routes; the two paths
//! meet only in tests that compare their outputs.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::register::{root_of_unity, Axis, QuditState, RegisterShape};
use crate::tol;

/// Dense matrices are refused above this dimension; larger objects must be
/// handled matrix-free.
pub const DENSE_OPERATOR_CAP: usize = 1 << 12;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn cone() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 || dim > DENSE_OPERATOR_CAP {
            return Err(Error::OperatorTooLarge {
                dim,
                cap: DENSE_OPERATOR_CAP,
            });
        }
        Ok(DenseOperator {
            dim,
            data: vec![czero(); dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = cone();
        }
        Ok(m)
    }

    pub fn from_data(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || dim > DENSE_OPERATOR_CAP {
            return Err(Error::OperatorTooLarge {
                dim,
                cap: DENSE_OPERATOR_CAP,
            });
        }
        if data.len() != dim * dim {
            return Err(Error::AmplitudeLengthMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(DenseOperator { dim, data })
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

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        let dim = self
            .dim
            .checked_mul(other.dim)
            .filter(|&v| v <= DENSE_OPERATOR_CAP)
            .ok_or(Error::OperatorTooLarge {
                dim: usize::MAX,
                cap: DENSE_OPERATOR_CAP,
            })?;
        let mut out = Self::zeros(dim)?;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.entry(i, j);
                if a == czero() {
                    continue;
                }
                for k in 0..other.dim {
                    for l in 0..other.dim {
                        out.data[(i * other.dim + k) * dim + (j * other.dim + l)] =
                            a * other.entry(k, l);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                a: self.dim,
                b: other.dim,
            });
        }
        let dim = self.dim;
        let mut out = Self::zeros(dim)?;
        for i in 0..dim {
            for k in 0..dim {
                let a = self.data[i * dim + k];
                if a == czero() {
                    continue;
                }
                let row = &other.data[k * dim..(k + 1) * dim];
                let dst = &mut out.data[i * dim..(i + 1) * dim];
                for (o, b) in dst.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                a: self.dim,
                b: v.len(),
            });
        }
        Ok((0..self.dim)
            .map(|i| {
                self.data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn adjoint(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[j * self.dim + i] = self.entry(i, j).conj();
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                a: self.dim,
                b: other.dim,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(DenseOperator {
            dim: self.dim,
            data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(self.add(&other.scale(Complex64::new(-1.0, 0.0)))?)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        DenseOperator {
            dim: self.dim,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn unitarity_defect(&self) -> f64 {
        crate::register::unitarity_defect(&self.data, self.dim)
    }
}

/// sigma_x as a 2x2 dense block.
pub fn sigma_x() -> DenseOperator {
    DenseOperator::from_data(2, vec![czero(), cone(), cone(), czero()]).expect("2x2 fits")
}

/// sigma_y as a 2x2 dense block.
pub fn sigma_y() -> DenseOperator {
    DenseOperator::from_data(
        2,
        vec![
            czero(),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            czero(),
        ],
    )
    .expect("2x2 fits")
}

/// sigma_z as a 2x2 dense block.
pub fn sigma_z() -> DenseOperator {
    DenseOperator::from_data(2, vec![cone(), czero(), czero(), Complex64::new(-1.0, 0.0)])
        .expect("2x2 fits")
}

/// Generalized clock matrix: Z|a> = q^a |a>, q = exp(i 2 pi / d).
pub fn qudit_z(d: usize) -> Result<DenseOperator> {
    let mut m = DenseOperator::zeros(d)?;
    for a in 0..d {
        m.set(a, a, root_of_unity(d, a as i64));
    }
    Ok(m)
}

/// Generalized shift matrix with X|a> = |a-1 mod d>, the convention under
/// which XZ = qZX and the Fourier kets are X eigenstates.
pub fn qudit_x(d: usize) -> Result<DenseOperator> {
    let mut m = DenseOperator::zeros(d)?;
    for b in 0..d {
        m.set((b + d - 1) % d, b, cone());
    }
    Ok(m)
}

/// Kronecker product across sites; `None` places an identity factor. Site 0
/// is the leftmost factor, matching the most-significant-digit layout.
pub fn operator_from_sites(
    d: usize,
    factors: &[Option<&DenseOperator>],
) -> Result<DenseOperator> {
    if factors.is_empty() {
        return Err(Error::EmptyRegister);
    }
    let ident = DenseOperator::identity(d)?;
    let mut acc: Option<DenseOperator> = None;
    for f in factors {
        let block = match f {
            Some(m) => {
                if m.dim() != d {
                    return Err(Error::DimensionMismatch { a: m.dim(), b: d });
                }
                (*m).clone()
            }
            None => ident.clone(),
        };
        acc = Some(match acc {
            None => block,
            Some(prev) => prev.kron(&block)?,
        });
    }
    Ok(acc.expect("factors nonempty"))
}

/// Product of clock matrices over every site of `shape`: the parity
/// operator whose eigenvalues are the d-th roots of unity q^n.
pub fn build_parity_operator(shape: RegisterShape) -> Result<DenseOperator> {
    let z = qudit_z(shape.d())?;
    let factors: Vec<Option<&DenseOperator>> = vec![Some(&z); shape.n_sites()];
    operator_from_sites(shape.d(), &factors)
}

/// Spectral projectors of `op` onto the declared eigenvalues, via Lagrange
/// interpolation on the spectrum.
///
/// The family is validated before it is returned: each projector must be
/// idempotent and nonzero, distinct projectors must annihilate each other,
/// and the family must sum to the identity. A declared eigenvalue the
/// operator does not possess yields a zero projector and is reported as
/// missing; an undeclared eigenvalue breaks completeness and is reported as
/// a projector defect.
pub fn build_projectors(
    op: &DenseOperator,
    eigenvalues: &[Complex64],
) -> Result<Vec<DenseOperator>> {
    if eigenvalues.is_empty() {
        return Err(Error::ProjectorDefect("no eigenvalues declared".into()));
    }
    for (a, la) in eigenvalues.iter().enumerate() {
        for lb in &eigenvalues[a + 1..] {
            if (la - lb).norm() < 1e-9 {
                return Err(Error::ProjectorDefect(format!(
                    "duplicate eigenvalue {la}"
                )));
            }
        }
    }
    let ident = DenseOperator::identity(op.dim())?;
    let mut projectors = Vec::with_capacity(eigenvalues.len());
    for (j, lam_j) in eigenvalues.iter().enumerate() {
        let mut p = ident.clone();
        for (k, lam_k) in eigenvalues.iter().enumerate() {
            if k == j {
                continue;
            }
            let shifted = op.sub(&ident.scale(*lam_k))?;
            p = p.matmul(&shifted)?.scale(cone() / (lam_j - lam_k));
        }
        projectors.push(p);
    }
    // validation: spectral resolution must hold to near machine precision
    let mut sum = DenseOperator::zeros(op.dim())?;
    let mut rebuilt = DenseOperator::zeros(op.dim())?;
    for (p, lam) in projectors.iter().zip(eigenvalues) {
        sum = sum.add(p)?;
        rebuilt = rebuilt.add(&p.scale(*lam))?;
    }
    let completeness = sum.max_abs_diff(&ident)?;
    if completeness > tol::NETWORK_EXACT {
        return Err(Error::ProjectorDefect(format!(
            "projector family sums to identity only within {completeness:.3e}"
        )));
    }
    let resolution = rebuilt.max_abs_diff(op)?;
    if resolution > tol::NETWORK_EXACT {
        return Err(Error::ProjectorDefect(format!(
            "declared eigenvalues rebuild the operator only within {resolution:.3e}"
        )));
    }
    for (j, p) in projectors.iter().enumerate() {
        if p.trace().norm() < 0.5 {
            return Err(Error::EigenvalueMissing(format!("{}", eigenvalues[j])));
        }
        let idem = p.matmul(p)?.max_abs_diff(p)?;
        if idem > tol::NETWORK_EXACT {
            return Err(Error::ProjectorDefect(format!(
                "projector {j} idempotent only within {idem:.3e}"
            )));
        }
        for (k, q) in projectors.iter().enumerate() {
            if k == j {
                continue;
            }
            let cross = p.matmul(q)?.max_abs();
            if cross > tol::NETWORK_EXACT {
                return Err(Error::ProjectorDefect(format!(
                    "projectors {j} and {k} overlap by {cross:.3e}"
                )));
            }
        }
    }
    Ok(projectors)
}

/// <state|op|state>.
pub fn expectation(op: &DenseOperator, state: &QuditState) -> Result<Complex64> {
    let w = op.matvec(state.amps())?;
    Ok(state
        .amps()
        .iter()
        .zip(&w)
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// One measurement branch of a reference (oracle-side) measurement.
#[derive(Debug, Clone)]
pub struct ReferenceOutcome {
    pub outcome: usize,
    pub probability: f64,
    pub post_state: Option<QuditState>,
}

/// Projective parity measurement computed entirely on the dense route:
/// build the parity operator, resolve it into projectors, apply them.
pub fn parity_reference_distribution(state: &QuditState) -> Result<Vec<ReferenceOutcome>> {
    let shape = state.shape();
    let d = shape.d();
    let op = build_parity_operator(shape)?;
    let eigenvalues: Vec<Complex64> = (0..d).map(|n| root_of_unity(d, n as i64)).collect();
    let projectors = build_projectors(&op, &eigenvalues)?;
    project_distribution(state, &projectors)
}

fn project_distribution(
    state: &QuditState,
    projectors: &[DenseOperator],
) -> Result<Vec<ReferenceOutcome>> {
    let shape = state.shape();
    projectors
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let w = p.matvec(state.amps())?;
            let raw: f64 = w.iter().map(|a| a.norm_sqr()).sum();
            let probability = raw.clamp(0.0, 1.0);
            let post_state = if raw < tol::PRUNE_PROBABILITY {
                None
            } else {
                let scale = 1.0 / raw.sqrt();
                Some(QuditState::from_amplitudes_unchecked(
                    shape,
                    w.into_iter().map(|a| a * scale).collect(),
                ))
            };
            Ok(ReferenceOutcome {
                outcome: n,
                probability,
                post_state,
            })
        })
        .collect()
}

/// Dense matrix of a Pauli string over qubit sites; `None` entries are
/// identity sites.
pub fn element_operator(axes: &[Option<Axis>]) -> Result<DenseOperator> {
    let blocks: Vec<DenseOperator> = axes
        .iter()
        .map(|a| match a {
            Some(Axis::X) => sigma_x(),
            Some(Axis::Y) => sigma_y(),
            Some(Axis::Z) => sigma_z(),
            None => DenseOperator::identity(2).expect("2x2 fits"),
        })
        .collect();
    let refs: Vec<Option<&DenseOperator>> = blocks.iter().map(Some).collect();
    operator_from_sites(2, &refs)
}

/// Controlled Pauli string with the control on a prepended probe qubit:
/// |0><0| (x) I + |1><1| (x) P.
pub fn controlled_element_operator(axes: &[Option<Axis>]) -> Result<DenseOperator> {
    let p = element_operator(axes)?;
    let ident = DenseOperator::identity(p.dim())?;
    let proj0 = DenseOperator::from_data(2, vec![cone(), czero(), czero(), czero()])?;
    let proj1 = DenseOperator::from_data(2, vec![czero(), czero(), czero(), cone()])?;
    proj0.kron(&ident)?.add(&proj1.kron(&p)?)
}

/// Projective Pauli-string measurement on the dense route, outcomes 0 -> +1
/// and 1 -> -1.
pub fn pauli_reference_distribution(
    state: &QuditState,
    axes: &[Option<Axis>],
) -> Result<Vec<ReferenceOutcome>> {
    let shape = state.shape();
    if shape.d() != 2 {
        return Err(Error::RequiresQubits(shape.d()));
    }
    if axes.len() != shape.n_sites() {
        return Err(Error::ElementLengthMismatch {
            len: axes.len(),
            n: shape.n_sites(),
        });
    }
    let op = element_operator(axes)?;
    let eigenvalues = [cone(), Complex64::new(-1.0, 0.0)];
    let projectors = build_projectors(&op, &eigenvalues)?;
    project_distribution(state, &projectors)
}

/// Applies a two-site gate given as an explicit 4x4 matrix over the digit
/// pair (site_a, site_b), directly on raw amplitudes.
fn apply_two_site(
    amps: &mut [Complex64],
    shape: RegisterShape,
    site_a: usize,
    site_b: usize,
    m: &[Complex64; 16],
) -> Result<()> {
    shape.check_site(site_a)?;
    shape.check_site(site_b)?;
    if site_a == site_b {
        return Err(Error::PhaseGateSameSite(site_a));
    }
    let stride_a = shape.stride(site_a)?;
    let stride_b = shape.stride(site_b)?;
    let mut scratch = [czero(); 4];
    for idx in 0..shape.dim() {
        if shape.digit_at(idx, site_a) != 0 || shape.digit_at(idx, site_b) != 0 {
            continue;
        }
        for a in 0..2 {
            for b in 0..2 {
                scratch[2 * a + b] = amps[idx + a * stride_a + b * stride_b];
            }
        }
        for a in 0..2 {
            for b in 0..2 {
                let row = 2 * a + b;
                let mut acc = czero();
                for (col, s) in scratch.iter().enumerate() {
                    acc += m[row * 4 + col] * s;
                }
                amps[idx + a * stride_a + b * stride_b] = acc;
            }
        }
    }
    Ok(())
}

const CNOT: [Complex64; 16] = {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [
        one, zero, zero, zero, //
        zero, one, zero, zero, //
        zero, zero, zero, one, //
        zero, zero, one, zero,
    ]
};

/// Parity counting by explicit C-NOT gates: a probe prepared in |0^z> is
/// the target of one C-NOT per system qubit, then measured in the z basis.
/// Outcome 0 means even parity. Returns all branches.
pub fn sequential_cnot_distribution(state: &QuditState) -> Result<Vec<ReferenceOutcome>> {
    let shape = state.shape();
    if shape.d() != 2 {
        return Err(Error::RequiresQubits(shape.d()));
    }
    if shape.has_probe() {
        return Err(Error::ProbeAlreadyPresent);
    }
    let probe = [cone(), czero()];
    let joint = state.adjoin_probe(&probe)?;
    let joint_shape = joint.shape();
    let mut amps = joint.into_amps();
    for control in joint_shape.system_sites() {
        apply_two_site(&mut amps, joint_shape, control, 0, &CNOT)?;
    }
    let counted = QuditState::from_amplitudes_unchecked(joint_shape, amps);
    (0..2)
        .map(|r| {
            let (probability, post_state) = counted.project_site0(r)?;
            Ok(ReferenceOutcome {
                outcome: r,
                probability,
                post_state,
            })
        })
        .collect()
}

/// Samples one branch of [`sequential_cnot_distribution`] by Born rule.
pub fn sequential_cnot_reference<R: Rng + ?Sized>(
    state: &QuditState,
    rng: &mut R,
) -> Result<ReferenceOutcome> {
    let branches = sequential_cnot_distribution(state)?;
    Ok(sample_branch(branches, rng))
}

pub(crate) fn sample_branch<R: Rng + ?Sized>(
    branches: Vec<ReferenceOutcome>,
    rng: &mut R,
) -> ReferenceOutcome {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut fallback = 0;
    for (i, b) in branches.iter().enumerate() {
        if b.probability > 0.0 {
            fallback = i;
        }
        acc += b.probability;
        if u < acc {
            return branches.into_iter().nth(i).expect("index in range");
        }
    }
    branches.into_iter().nth(fallback).expect("index in range")
}

/// Counting operator N^- = sum_i (1 - sigma_z_i)/2 over every site.
pub fn excitation_count_operator(shape: RegisterShape) -> Result<DenseOperator> {
    if shape.d() != 2 {
        return Err(Error::RequiresQubits(shape.d()));
    }
    let z = sigma_z();
    let mut acc = DenseOperator::zeros(shape.dim())?;
    let half = Complex64::new(0.5, 0.0);
    for site in 0..shape.n_sites() {
        let mut factors: Vec<Option<&DenseOperator>> = vec![None; shape.n_sites()];
        factors[site] = Some(&z);
        let zi = operator_from_sites(2, &factors)?;
        let ident = DenseOperator::identity(shape.dim())?;
        acc = acc.add(&ident.sub(&zi)?.scale(half))?;
    }
    Ok(acc)
}

/// Frobenius norm of [N^-, P_z], computed densely. Both operators are
/// diagonal in the computational basis, so this must come out exactly zero.
pub fn excitation_parity_commutator_norm(shape: RegisterShape) -> Result<f64> {
    let n_minus = excitation_count_operator(shape)?;
    let parity = build_parity_operator(shape)?;
    let c = n_minus.matmul(&parity)?.sub(&parity.matmul(&n_minus)?)?;
    Ok(c.frobenius_norm())
}

/// Matrix-free projection onto one parity sector: keeps exactly the basis
/// amplitudes whose digit sum is `sector` mod d. This is the diagonal
/// spectral projector applied by index arithmetic, usable beyond the
/// dense-operator cap.
pub fn parity_sector_projection(state: &QuditState, sector: usize) -> Result<ReferenceOutcome> {
    let shape = state.shape();
    let d = shape.d();
    if sector >= d {
        return Err(Error::DigitOutOfRange { digit: sector, d });
    }
    let n = shape.n_sites();
    let mut raw = 0.0;
    let mut kept: Vec<Complex64> = state
        .amps()
        .iter()
        .enumerate()
        .map(|(idx, &a)| {
            let mut rest = idx;
            let mut sum = 0;
            for _ in 0..n {
                sum += rest % d;
                rest /= d;
            }
            if sum % d == sector {
                raw += a.norm_sqr();
                a
            } else {
                czero()
            }
        })
        .collect();
    let probability = raw.clamp(0.0, 1.0);
    let post_state = if raw < tol::PRUNE_PROBABILITY {
        None
    } else {
        let scale = 1.0 / raw.sqrt();
        for a in &mut kept {
            *a *= scale;
        }
        Some(QuditState::from_amplitudes_unchecked(shape, kept))
    };
    Ok(ReferenceOutcome {
        outcome: sector,
        probability,
        post_state,
    })
}

/// Matrix-free parity sector probabilities: sums |amp|^2 per value of
/// (digit sum mod d). Usable far beyond the dense-operator cap.
pub fn parity_sector_probabilities(state: &QuditState) -> Vec<f64> {
    let shape = state.shape();
    let d = shape.d();
    let n = shape.n_sites();
    let mut probs = vec![0.0; d];
    for (idx, a) in state.amps().iter().enumerate() {
        let mut rest = idx;
        let mut sum = 0;
        for _ in 0..n {
            sum += rest % d;
            rest /= d;
        }
        probs[sum % d] += a.norm_sqr();
    }
    probs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn shift_and_clock_satisfy_the_weyl_relation() {
        for d in 2..=5 {
            let x = qudit_x(d).unwrap();
            let z = qudit_z(d).unwrap();
            let xz = x.matmul(&z).unwrap();
            let qzx = z.matmul(&x).unwrap().scale(root_of_unity(d, 1));
            assert!(xz.max_abs_diff(&qzx).unwrap() <= 1e-15);
        }
    }

    #[test]
    fn parity_operator_is_diagonal_with_digit_sum_phases() {
        let shape = RegisterShape::system(3, 2).unwrap();
        let op = build_parity_operator(shape).unwrap();
        for idx in 0..shape.dim() {
            let digits = shape.digits_of(idx);
            let expect = root_of_unity(3, (digits[0] + digits[1]) as i64);
            assert!((op.entry(idx, idx) - expect).norm() <= 1e-15);
            for j in 0..shape.dim() {
                if j != idx {
                    assert_eq!(op.entry(idx, j), Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn projector_family_resolves_the_parity_operator() {
        for d in [2usize, 3, 4] {
            let shape = RegisterShape::system(d, 2).unwrap();
            let op = build_parity_operator(shape).unwrap();
            let eigenvalues: Vec<Complex64> =
                (0..d).map(|n| root_of_unity(d, n as i64)).collect();
            let projectors = build_projectors(&op, &eigenvalues).unwrap();
            // reconstruct the operator from its spectral parts
            let mut rebuilt = DenseOperator::zeros(shape.dim()).unwrap();
            for (n, p) in projectors.iter().enumerate() {
                rebuilt = rebuilt.add(&p.scale(eigenvalues[n])).unwrap();
            }
            assert!(rebuilt.max_abs_diff(&op).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn missing_eigenvalues_are_detected() {
        let ident = DenseOperator::identity(4).unwrap();
        let err = build_projectors(
            &ident,
            &[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::EigenvalueMissing(_)));
    }

    #[test]
    fn undeclared_eigenvalues_break_completeness() {
        let z = sigma_z();
        let err = build_projectors(&z, &[Complex64::new(1.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::ProjectorDefect(_)));
    }

    #[test]
    fn controlled_z_string_on_one_site_is_cz() {
        let op = controlled_element_operator(&[Some(Axis::Z)]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i != j {
                    0.0
                } else if i == 3 {
                    -1.0
                } else {
                    1.0
                };
                assert_eq!(op.entry(i, j), Complex64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn cnot_counting_tracks_basis_parity() {
        let shape = RegisterShape::system(2, 3).unwrap();
        for idx in 0..shape.dim() {
            let digits = shape.digits_of(idx);
            let parity: usize = digits.iter().sum::<usize>() % 2;
            let state = QuditState::basis(shape, &digits).unwrap();
            let dist = sequential_cnot_distribution(&state).unwrap();
            assert_abs_diff_eq!(dist[parity].probability, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(dist[1 - parity].probability, 0.0, epsilon = 1e-15);
            let post = dist[parity].post_state.as_ref().unwrap();
            assert!(post.max_amp_diff(&state).unwrap() <= 1e-15);
            assert!(dist[1 - parity].post_state.is_none());
        }
    }

    #[test]
    fn plus_plus_parity_branches_are_bell_states() {
        use crate::register::{Axis as A, AxisKet};
        let shape = RegisterShape::system(2, 2).unwrap();
        let plus = QuditState::uniform_product(shape, AxisKet::new(A::X, 0)).unwrap();
        let dist = parity_reference_distribution(&plus).unwrap();
        assert_abs_diff_eq!(dist[0].probability, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(dist[1].probability, 0.5, epsilon = 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let even = dist[0].post_state.as_ref().unwrap();
        let expect_even = QuditState::from_amplitudes(
            shape,
            vec![
                Complex64::new(s, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(s, 0.0),
            ],
        )
        .unwrap();
        assert!(even.max_amp_diff(&expect_even).unwrap() <= 1e-12);
    }

    #[test]
    fn expectation_of_z_string_flips_with_excitations() {
        let shape = RegisterShape::system(2, 2).unwrap();
        let op = element_operator(&[Some(Axis::Z), Some(Axis::Z)]).unwrap();
        let even = QuditState::basis(shape, &[1, 1]).unwrap();
        let odd = QuditState::basis(shape, &[0, 1]).unwrap();
        assert_abs_diff_eq!(expectation(&op, &even).unwrap().re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expectation(&op, &odd).unwrap().re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn counting_and_parity_operators_commute_exactly() {
        for n in 1..=5 {
            let shape = RegisterShape::system(2, n).unwrap();
            assert_eq!(excitation_parity_commutator_norm(shape).unwrap(), 0.0);
        }
    }

    #[test]
    fn matrix_free_sector_probabilities_match_projectors() {
        for (d, n) in [(2, 4), (3, 3)] {
            let shape = RegisterShape::system(d, n).unwrap();
            let state = QuditState::random(shape, 23);
            let free = parity_sector_probabilities(&state);
            let dense = parity_reference_distribution(&state).unwrap();
            for (n_out, branch) in dense.iter().enumerate() {
                assert_abs_diff_eq!(free[n_out], branch.probability, epsilon = 1e-12);
            }
        }
    }
}
