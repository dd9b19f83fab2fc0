//! Staged probe measurement of Pauli-group strings.
//!
//! A string such as XXEZY is measured with the same probe and the same
//! collective phase gates as the plain parity measurement. Sites sharing an
//! axis form a stage: their basis is cycled so that sigma_axis becomes
//! sigma_z, the z-parity entangler runs restricted to the probe plus that
//! group, and the cycle is undone. Each stage imprints a controlled string
//! factor on the probe; because the stages touch disjoint sites, their
//! composition is the controlled full string, and a single x readout of
//! the probe completes the projective measurement. Identity (e) sites are
//! never touched.

use num_complex::Complex64;
use rand::Rng;

use crate::collective::collective_phase_unitary;
use crate::error::{Error, Result};
use crate::protocol::{MeasurementRecord, ParityOutcome};
use crate::register::{adjoint, fourier_matrix, root_of_unity, Axis, AxisKet, QuditState};

/// A Pauli-group string over qubit sites: one axis per site, `None` for
/// identity. At least one site must be non-identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliGroupElement {
    axes: Vec<Option<Axis>>,
}

impl PauliGroupElement {
    pub fn new(axes: Vec<Option<Axis>>) -> Result<Self> {
        if axes.iter().all(Option::is_none) {
            return Err(Error::IdentityElement);
        }
        Ok(PauliGroupElement { axes })
    }

    /// Parses strings like "XXEZY": one character per site from
    /// {X, Y, Z, E}, case-insensitive.
    pub fn parse(s: &str) -> Result<Self> {
        let axes = s
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'X' => Ok(Some(Axis::X)),
                'Y' => Ok(Some(Axis::Y)),
                'Z' => Ok(Some(Axis::Z)),
                'E' => Ok(None),
                other => Err(Error::UnknownAxisChar(other)),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }

    pub fn axes(&self) -> &[Option<Axis>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    /// System sites (0-based) carrying the given axis.
    pub fn sites_with_axis(&self, axis: Axis) -> Vec<usize> {
        self.axes
            .iter()
            .enumerate()
            .filter_map(|(i, a)| (*a == Some(axis)).then_some(i))
            .collect()
    }
}

impl std::fmt::Display for PauliGroupElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for a in &self.axes {
            let ch = match a {
                Some(Axis::X) => 'X',
                Some(Axis::Y) => 'Y',
                Some(Axis::Z) => 'Z',
                None => 'E',
            };
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}

/// Single-site unitary R with R sigma_z R† = sigma_axis.
///
/// x uses the Hadamard matrix, y uses the phase-augmented Hadamard pinned
/// to +sigma_y, and z is already native so R is the identity.
pub fn cyclic_transform(axis: Axis) -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match axis {
        Axis::X => vec![
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
        ],
        Axis::Y => vec![
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(0.0, s),
            Complex64::new(0.0, -s),
        ],
        Axis::Z => vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ],
    }
}

fn validate(state: &QuditState, element: &PauliGroupElement) -> Result<()> {
    let shape = state.shape();
    if shape.d() != 2 {
        return Err(Error::RequiresQubits(shape.d()));
    }
    if shape.has_probe() {
        return Err(Error::ProbeAlreadyPresent);
    }
    if element.len() != shape.n_sites() {
        return Err(Error::ElementLengthMismatch {
            len: element.len(),
            n: shape.n_sites(),
        });
    }
    Ok(())
}

/// One measurement stage: cycle the group sites into the z basis, run the
/// parity entangler over probe + group, cycle back.
fn run_stage(joint: &QuditState, axis: Axis, group_register_sites: &[usize]) -> Result<QuditState> {
    if group_register_sites.is_empty() {
        return Ok(joint.clone());
    }
    let r = cyclic_transform(axis);
    let r_dag = adjoint(&r, 2);
    let mut state = joint.clone();
    if axis != Axis::Z {
        for &site in group_register_sites {
            state = state.apply_single_site(site, &r_dag)?;
        }
    }
    let mut with_probe = vec![0usize];
    with_probe.extend_from_slice(group_register_sites);
    state = collective_phase_unitary(&state, &with_probe)?;
    state = collective_phase_unitary(&state, group_register_sites)?;
    if axis != Axis::Z {
        for &site in group_register_sites {
            state = state.apply_single_site(site, &r)?;
        }
    }
    Ok(state)
}

/// Exact outcome distribution for the staged measurement, stages executed
/// in the given axis order. The distribution is order-independent; the
/// parameter exists so tests can demonstrate exactly that.
pub fn pauli_distribution_staged(
    state: &QuditState,
    element: &PauliGroupElement,
    stage_order: &[Axis; 3],
) -> Result<Vec<MeasurementRecord>> {
    validate(state, element)?;
    {
        let mut seen = [false; 3];
        for axis in stage_order {
            let slot = match axis {
                Axis::X => 0,
                Axis::Y => 1,
                Axis::Z => 2,
            };
            if seen[slot] {
                return Err(Error::InvalidSupport);
            }
            seen[slot] = true;
        }
    }
    let probe = AxisKet::new(Axis::X, 0).vector(2)?;
    let mut joint = state.adjoin_probe(&probe)?;
    for &axis in stage_order {
        // element sites are system-indexed; the register shifts them by one
        // to make room for the probe at site 0
        let group: Vec<usize> = element
            .sites_with_axis(axis)
            .into_iter()
            .map(|s| s + 1)
            .collect();
        joint = run_stage(&joint, axis, &group)?;
    }
    let rotated = joint.apply_single_site(0, &adjoint(&fourier_matrix(2), 2))?;
    (0..2)
        .map(|outcome| {
            let (probability, post_state) = rotated.project_site0(outcome)?;
            Ok(MeasurementRecord {
                outcome,
                eigenvalue: root_of_unity(2, outcome as i64),
                probability,
                post_state,
            })
        })
        .collect()
}

/// Exact outcome distribution of the probe measurement of `element`:
/// outcome 0 is the +1 eigenspace, outcome 1 the -1 eigenspace.
pub fn pauli_distribution(
    state: &QuditState,
    element: &PauliGroupElement,
) -> Result<Vec<MeasurementRecord>> {
    pauli_distribution_staged(state, element, &[Axis::X, Axis::Y, Axis::Z])
}

/// Samples one staged measurement of `element` and collapses accordingly.
/// The probe is prepared in |0^x>, so the readout label equals the outcome.
pub fn measure_pauli_element<R: Rng + ?Sized>(
    state: &QuditState,
    element: &PauliGroupElement,
    rng: &mut R,
) -> Result<ParityOutcome> {
    let records = pauli_distribution(state, element)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut chosen = 0;
    for (i, r) in records.iter().enumerate() {
        if r.probability > 0.0 {
            chosen = i;
        }
        acc += r.probability;
        if u < acc {
            chosen = i;
            break;
        }
    }
    let record = records.into_iter().nth(chosen).expect("index in range");
    Ok(ParityOutcome {
        probe_label: record.outcome,
        record,
    })
}
