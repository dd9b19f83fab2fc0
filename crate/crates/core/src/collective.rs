//! Collective phase operations on site subsets.
//!
//! Two routes produce the same diagonal unitary on a qubit support: the
//! explicit product of pairwise phase gates, and a single weight-table pass
//! whose phase depends only on the Hamming weight inside the support. The
//! weight table is derived from the quadratic collective-spin generator
//! J_z^2/2 - ((n-1)/2) J_z + ((n-1)^2 - 1)/8 evaluated on the weight-k
//! eigenspace; its exponent is always an integer, so the table is exact ±1
//! and the two routes agree with no floating slack.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::register::{root_of_unity, Axis, QuditState, RegisterShape};

/// All unordered pairs (i, j), i < j, of the given sites.
pub fn all_pairs(sites: &[usize]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(sites.len() * sites.len().saturating_sub(1) / 2);
    for (a, &i) in sites.iter().enumerate() {
        for &j in &sites[a + 1..] {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Pairs linking one hub site to every other listed site.
pub fn star_pairs(hub: usize, leaves: &[usize]) -> Vec<(usize, usize)> {
    leaves.iter().map(|&l| (hub, l)).collect()
}

fn validate_support(shape: RegisterShape, support: &[usize]) -> Result<()> {
    if support.is_empty() {
        return Err(Error::InvalidSupport);
    }
    let mut seen = vec![false; shape.n_sites()];
    for &s in support {
        shape.check_site(s)?;
        if seen[s] {
            return Err(Error::InvalidSupport);
        }
        seen[s] = true;
    }
    Ok(())
}

fn validate_pairs(shape: RegisterShape, pairs: &[(usize, usize)]) -> Result<()> {
    for &(i, j) in pairs {
        shape.check_site(i)?;
        shape.check_site(j)?;
        if i == j {
            return Err(Error::PhaseGateSameSite(i));
        }
    }
    Ok(())
}

/// Two-site phase gate |a>|b> -> q^(ab) |a>|b> with q = exp(i 2 pi / d).
/// For qubits this is the controlled-Z gate and is its own inverse.
pub fn pairwise_phase_gate(state: &QuditState, i: usize, j: usize) -> Result<QuditState> {
    phase_gate_network(state, &[(i, j)])
}

/// Applies a product of pairwise phase gates in one pass.
///
/// The gates are diagonal and commute, so the exponents are summed per
/// basis index and applied as a single root-of-unity multiplication; the
/// result is independent of pair order by construction.
pub fn phase_gate_network(state: &QuditState, pairs: &[(usize, usize)]) -> Result<QuditState> {
    apply_network(state, pairs, 1)
}

/// Inverse of [`phase_gate_network`]: phases q^(-ab) per pair. Identical to
/// the forward network when d = 2.
pub fn inverse_phase_gate_network(
    state: &QuditState,
    pairs: &[(usize, usize)],
) -> Result<QuditState> {
    apply_network(state, pairs, -1)
}

fn apply_network(state: &QuditState, pairs: &[(usize, usize)], sign: i64) -> Result<QuditState> {
    let shape = state.shape();
    validate_pairs(shape, pairs)?;
    let d = shape.d();
    let roots: Vec<Complex64> = (0..d).map(|k| root_of_unity(d, k as i64)).collect();
    let n = shape.n_sites();
    let mut digits = vec![0usize; n];
    let amps = state
        .amps()
        .iter()
        .enumerate()
        .map(|(idx, &a)| {
            let mut rest = idx;
            for site in (0..n).rev() {
                digits[site] = rest % d;
                rest /= d;
            }
            let mut exponent: usize = 0;
            for &(i, j) in pairs {
                exponent += digits[i] * digits[j];
            }
            let k = (sign * exponent as i64).rem_euclid(d as i64) as usize;
            a * roots[k]
        })
        .collect();
    Ok(QuditState::from_amplitudes_unchecked(shape, amps))
}

/// Phase table for the one-pulse collective gate on an n-site qubit
/// support, indexed by Hamming weight k.
///
/// Entry k is exp(-i pi E(k)) with E(k) = m^2/2 - ((n-1)/2) m
/// + ((n-1)^2 - 1)/8 at m = (n - 2k)/2. E(k) reduces to k(k-1)/2, an
/// integer, and every intermediate above is an exact dyadic in f64, so the
/// table is computed as exact ±1 from the parity of E(k).
pub fn collective_phase_weights(n_support: usize) -> Result<Vec<Complex64>> {
    if n_support == 0 {
        return Err(Error::InvalidSupport);
    }
    let n = n_support as f64;
    Ok((0..=n_support)
        .map(|k| {
            let m = (n - 2.0 * k as f64) / 2.0;
            let e = m * m / 2.0 - (n - 1.0) / 2.0 * m + ((n - 1.0) * (n - 1.0) - 1.0) / 8.0;
            let j = e.round();
            debug_assert_eq!(e, j, "weight exponent must be an integer");
            if (j as i64).rem_euclid(2) == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            }
        })
        .collect())
}

/// One-pulse collective phase gate over a qubit support: each basis state
/// picks up the weight-table phase for its Hamming weight inside the
/// support. Equals the full pairwise network over the support exactly,
/// global phase included.
pub fn collective_phase_unitary(state: &QuditState, support: &[usize]) -> Result<QuditState> {
    let shape = state.shape();
    if shape.d() != 2 {
        return Err(Error::RequiresQubits(shape.d()));
    }
    validate_support(shape, support)?;
    let weights = collective_phase_weights(support.len())?;
    let n = shape.n_sites();
    let mask: usize = support.iter().map(|&s| 1usize << (n - 1 - s)).sum();
    let amps = state
        .amps()
        .iter()
        .enumerate()
        .map(|(idx, &a)| a * weights[(idx & mask).count_ones() as usize])
        .collect();
    Ok(QuditState::from_amplitudes_unchecked(shape, amps))
}

/// Rotation e^(i theta J_axis) on a qubit support, J_axis being half the
/// sum of the per-site Pauli matrices. Site terms commute, so this is the
/// same 2x2 rotation applied to every support site.
pub fn collective_rotation(
    state: &QuditState,
    support: &[usize],
    axis: Axis,
    theta: f64,
) -> Result<QuditState> {
    let shape = state.shape();
    if shape.d() != 2 {
        return Err(Error::RequiresQubits(shape.d()));
    }
    validate_support(shape, support)?;
    apply_on_each_site(state, support, &single_site_rotation(axis, theta))
}

/// e^(i theta sigma_axis / 2) as a dense 2x2 matrix.
pub fn single_site_rotation(axis: Axis, theta: f64) -> Vec<Complex64> {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let zero = Complex64::new(0.0, 0.0);
    match axis {
        Axis::X => vec![
            Complex64::new(c, 0.0),
            Complex64::new(0.0, s),
            Complex64::new(0.0, s),
            Complex64::new(c, 0.0),
        ],
        Axis::Y => vec![
            Complex64::new(c, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(c, 0.0),
        ],
        Axis::Z => vec![
            Complex64::new(c, s),
            zero,
            zero,
            Complex64::new(c, -s),
        ],
    }
}

/// Applies the same single-site unitary to each listed site.
pub fn apply_on_each_site(
    state: &QuditState,
    sites: &[usize],
    m: &[Complex64],
) -> Result<QuditState> {
    let mut out = state.clone();
    for &site in sites {
        out = out.apply_single_site(site, m)?;
    }
    Ok(out)
}

/// A diagonal unitary in either per-basis or Hamming-weight form.
#[derive(Debug, Clone)]
pub enum PhaseForm {
    /// One phase per basis index of the full register.
    PerBasis(Vec<Complex64>),
    /// Weight-table phases over a qubit support.
    HammingWeight {
        support: Vec<usize>,
        weights: Vec<Complex64>,
    },
}

/// Reified diagonal unitary, used where the phase profile itself is the
/// object under test or compilation.
#[derive(Debug, Clone)]
pub struct DiagonalUnitary {
    shape: RegisterShape,
    form: PhaseForm,
}

impl DiagonalUnitary {
    /// Weight-table form of the collective phase gate over a qubit support.
    pub fn collective(shape: RegisterShape, support: &[usize]) -> Result<Self> {
        if shape.d() != 2 {
            return Err(Error::RequiresQubits(shape.d()));
        }
        validate_support(shape, support)?;
        Ok(DiagonalUnitary {
            shape,
            form: PhaseForm::HammingWeight {
                support: support.to_vec(),
                weights: collective_phase_weights(support.len())?,
            },
        })
    }

    /// Per-basis form of a pairwise phase-gate network.
    pub fn from_pairs(shape: RegisterShape, pairs: &[(usize, usize)]) -> Result<Self> {
        validate_pairs(shape, pairs)?;
        let d = shape.d();
        let roots: Vec<Complex64> = (0..d).map(|k| root_of_unity(d, k as i64)).collect();
        let phases = (0..shape.dim())
            .map(|idx| {
                let exponent: usize = pairs
                    .iter()
                    .map(|&(i, j)| shape.digit_at(idx, i) * shape.digit_at(idx, j))
                    .sum();
                roots[exponent % d]
            })
            .collect();
        Ok(DiagonalUnitary {
            shape,
            form: PhaseForm::PerBasis(phases),
        })
    }

    pub fn shape(&self) -> RegisterShape {
        self.shape
    }

    pub fn form(&self) -> &PhaseForm {
        &self.form
    }

    /// Expands to one phase per basis index regardless of stored form.
    pub fn phases(&self) -> Vec<Complex64> {
        match &self.form {
            PhaseForm::PerBasis(p) => p.clone(),
            PhaseForm::HammingWeight { support, weights } => {
                let n = self.shape.n_sites();
                let mask: usize = support.iter().map(|&s| 1usize << (n - 1 - s)).sum();
                (0..self.shape.dim())
                    .map(|idx| weights[(idx & mask).count_ones() as usize])
                    .collect()
            }
        }
    }

    /// Largest deviation of any phase from unit modulus.
    pub fn max_modulus_defect(&self) -> f64 {
        self.phases()
            .iter()
            .map(|p| (p.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, state: &QuditState) -> Result<QuditState> {
        if state.shape() != self.shape {
            return Err(Error::DimensionMismatch {
                a: state.shape().dim(),
                b: self.shape.dim(),
            });
        }
        let phases = self.phases();
        let amps = state
            .amps()
            .iter()
            .zip(&phases)
            .map(|(a, p)| a * p)
            .collect();
        Ok(QuditState::from_amplitudes_unchecked(self.shape, amps))
    }
}
