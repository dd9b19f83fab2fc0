//! Probe-based projective parity measurement.
//!
//! The measurement is simulated literally, step by step: a probe site is
//! adjoined in an x ket, the collective phase gate acts on all sites, the
//! collective phase gate acts on the system sites alone, and the probe is
//! read out in the x basis. No projector shortcut is taken anywhere in this
//! module; the dense-projector route lives in [`crate::oracle`] and is only
//! ever consulted for comparison.
//!
//! For qubits the two collective gates are realized through the exact
//! weight tables of [`crate::collective`]; the second application undoes
//! the system-system pair phases because each pairwise gate is its own
//! inverse. For d > 2 the pairwise gates are not involutions, so the
//! system-side network is applied inverted, which reduces to the same
//! circuit at d = 2 and leaves exactly the probe-system star network in
//! general.

use num_complex::Complex64;
use rand::Rng;

use crate::collective::{
    all_pairs, collective_phase_unitary, inverse_phase_gate_network, phase_gate_network,
};
use crate::error::{Error, Result};
use crate::oracle;
use crate::register::{
    adjoint, fourier_matrix, root_of_unity, Axis, AxisKet, DensityMatrix, QuditState,
};
use crate::tol;

/// One branch of a projective measurement: outcome label, its eigenvalue,
/// the branch probability, and the normalized post-measurement state
/// (absent when the probability is below [`tol::PRUNE_PROBABILITY`]).
#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub outcome: usize,
    pub eigenvalue: Complex64,
    pub probability: f64,
    pub post_state: Option<QuditState>,
}

/// A parity branch together with the raw probe readout label that produces
/// it. With the probe prepared in |b^x>, outcome n surfaces as probe label
/// (n + b) mod d, so flipping the preparation relabels the probe readout
/// without touching the parity statistics.
#[derive(Debug, Clone)]
pub struct ParityBranch {
    pub probe_label: usize,
    pub record: MeasurementRecord,
}

/// Result of sampling one parity measurement.
#[derive(Debug, Clone)]
pub struct ParityOutcome {
    pub probe_label: usize,
    pub record: MeasurementRecord,
}

/// Gate route used to realize the two collective phase steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntangleRoute {
    /// Hamming-weight tables; qubit registers only.
    WeightTable,
    /// Explicit pairwise network, all-pairs forward then system pairs
    /// inverted; valid for every d.
    PairwiseNetwork,
}

fn entangle(joint: &QuditState, route: EntangleRoute) -> Result<QuditState> {
    let n_total = joint.shape().n_sites();
    let everyone: Vec<usize> = (0..n_total).collect();
    let system: Vec<usize> = (1..n_total).collect();
    match route {
        EntangleRoute::WeightTable => {
            let stepped = collective_phase_unitary(joint, &everyone)?;
            collective_phase_unitary(&stepped, &system)
        }
        EntangleRoute::PairwiseNetwork => {
            let stepped = phase_gate_network(joint, &all_pairs(&everyone))?;
            inverse_phase_gate_network(&stepped, &all_pairs(&system))
        }
    }
}

fn default_route(d: usize) -> EntangleRoute {
    if d == 2 {
        EntangleRoute::WeightTable
    } else {
        EntangleRoute::PairwiseNetwork
    }
}

fn branches_with_route(
    state: &QuditState,
    probe_label: usize,
    route: EntangleRoute,
) -> Result<Vec<ParityBranch>> {
    let shape = state.shape();
    if shape.has_probe() {
        return Err(Error::ProbeAlreadyPresent);
    }
    let d = shape.d();
    let probe = AxisKet::new(Axis::X, probe_label).vector(d)?;
    let joint = state.adjoin_probe(&probe)?;
    let entangled = entangle(&joint, route)?;
    // probe readout in the x basis: rotate x -> z, then measure site 0
    let rotated = entangled.apply_single_site(0, &adjoint(&fourier_matrix(d), d))?;
    (0..d)
        .map(|outcome| {
            let readout = (outcome + probe_label) % d;
            let (probability, post_state) = rotated.project_site0(readout)?;
            Ok(ParityBranch {
                probe_label: readout,
                record: MeasurementRecord {
                    outcome,
                    eigenvalue: root_of_unity(d, outcome as i64),
                    probability,
                    post_state,
                },
            })
        })
        .collect()
}

/// Every parity branch for a probe prepared in |label^x>, ordered by
/// outcome. Uses the weight-table route for qubits and the pairwise
/// network for d > 2.
pub fn parity_branches(state: &QuditState, probe_label: usize) -> Result<Vec<ParityBranch>> {
    branches_with_route(state, probe_label, default_route(state.shape().d()))
}

/// Same measurement forced through the explicit pairwise network,
/// available for every d. For qubits this must reproduce
/// [`parity_branches`] bit-for-bit up to root-of-unity rounding.
pub fn parity_branches_pairwise(
    state: &QuditState,
    probe_label: usize,
) -> Result<Vec<ParityBranch>> {
    branches_with_route(state, probe_label, EntangleRoute::PairwiseNetwork)
}

/// Exact parity distribution with the standard |0^x> probe: one record per
/// eigenvalue q^n of the site-wise clock product.
pub fn parity_distribution(state: &QuditState) -> Result<Vec<MeasurementRecord>> {
    Ok(parity_branches(state, 0)?
        .into_iter()
        .map(|b| b.record)
        .collect())
}

/// Samples one parity measurement with the probe prepared along `probe_init`
/// (x axis required) and collapses accordingly.
pub fn measure_parity<R: Rng + ?Sized>(
    state: &QuditState,
    probe_init: AxisKet,
    rng: &mut R,
) -> Result<ParityOutcome> {
    if probe_init.axis != Axis::X {
        return Err(Error::ProbeAxisNotX(probe_init.axis));
    }
    let branches = parity_branches(state, probe_init.label)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut chosen = 0;
    for (i, b) in branches.iter().enumerate() {
        if b.record.probability > 0.0 {
            chosen = i;
        }
        acc += b.record.probability;
        if u < acc {
            chosen = i;
            break;
        }
    }
    let branch = branches.into_iter().nth(chosen).expect("index in range");
    Ok(ParityOutcome {
        probe_label: branch.probe_label,
        record: branch.record,
    })
}

/// Result of the destructive counting baseline: every site is measured in
/// the computational basis and the parity is reconstructed from the count
/// of excited sites.
#[derive(Debug, Clone)]
pub struct DestructiveOutcome {
    pub n_minus: usize,
    pub parity_label: usize,
    pub collapsed: QuditState,
}

/// Measures every qubit in the z basis (jointly sampling one basis index)
/// and reports the excitation count, its parity, and the fully collapsed
/// product state.
pub fn destructive_parity_baseline<R: Rng + ?Sized>(
    state: &QuditState,
    rng: &mut R,
) -> Result<DestructiveOutcome> {
    let shape = state.shape();
    if shape.d() != 2 {
        return Err(Error::RequiresQubits(shape.d()));
    }
    let idx = state.sample_basis(rng);
    let digits = shape.digits_of(idx);
    let n_minus: usize = digits.iter().sum();
    Ok(DestructiveOutcome {
        n_minus,
        parity_label: n_minus % 2,
        collapsed: QuditState::basis(shape, &digits)?,
    })
}

/// Exact ensemble density matrix of the destructive baseline conditioned
/// on one parity sector: the classical mixture of surviving basis states.
pub fn baseline_sector_density(state: &QuditState, parity_label: usize) -> Result<DensityMatrix> {
    let shape = state.shape();
    if shape.d() != 2 {
        return Err(Error::RequiresQubits(shape.d()));
    }
    if parity_label > 1 {
        return Err(Error::DigitOutOfRange {
            digit: parity_label,
            d: 2,
        });
    }
    if shape.dim() > oracle::DENSE_OPERATOR_CAP {
        return Err(Error::OperatorTooLarge {
            dim: shape.dim(),
            cap: oracle::DENSE_OPERATOR_CAP,
        });
    }
    let dim = shape.dim();
    let weights: Vec<f64> = state
        .amps()
        .iter()
        .enumerate()
        .map(|(idx, a)| {
            if idx.count_ones() as usize % 2 == parity_label {
                a.norm_sqr()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total < tol::PRUNE_PROBABILITY {
        return Err(Error::ProjectorDefect(format!(
            "parity sector {parity_label} carries probability {total:.3e}"
        )));
    }
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (idx, w) in weights.iter().enumerate() {
        data[idx * dim + idx] = Complex64::new(w / total, 0.0);
    }
    Ok(DensityMatrix::from_parts(dim, data))
}

/// Side-by-side coherence comparison of the probe protocol and the
/// destructive counting baseline on the same state.
#[derive(Debug, Clone)]
pub struct CoherenceReport {
    /// Most probable parity outcome.
    pub dominant_outcome: usize,
    pub dominant_probability: f64,
    /// Fidelity between the protocol post-state for the dominant outcome
    /// and the exact normalized sector projection.
    pub protocol_post_fidelity: f64,
    /// Largest |rho_ij| of the baseline sector ensemble between basis
    /// states of different excitation count. Superposition structure the
    /// protocol preserves is destroyed here, so this must vanish.
    pub baseline_cross_count_coherence: f64,
    /// Frobenius norm of the commutator between the counting operator and
    /// the parity operator, computed densely when the register fits the
    /// dense cap.
    pub counting_parity_commutator: Option<f64>,
}

/// Builds a [`CoherenceReport`] for a qubit register.
pub fn coherence_report(state: &QuditState) -> Result<CoherenceReport> {
    let shape = state.shape();
    if shape.d() != 2 {
        return Err(Error::RequiresQubits(shape.d()));
    }
    let distribution = parity_distribution(state)?;
    let (dominant_outcome, dominant) = distribution
        .iter()
        .enumerate()
        .max_by(|a, b| {
            a.1.probability
                .partial_cmp(&b.1.probability)
                .expect("probabilities are finite")
        })
        .expect("distribution is nonempty");
    let exact = oracle::parity_sector_projection(state, dominant_outcome)?;
    let protocol_post_fidelity = match (&dominant.post_state, &exact.post_state) {
        (Some(a), Some(b)) => a.fidelity(b)?,
        _ => 0.0,
    };
    let rho = baseline_sector_density(state, dominant_outcome)?;
    let mut cross: f64 = 0.0;
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            if (i.count_ones()) != (j.count_ones()) {
                cross = cross.max(rho.entry(i, j).norm());
            }
        }
    }
    let counting_parity_commutator = if shape.dim() <= oracle::DENSE_OPERATOR_CAP {
        Some(oracle::excitation_parity_commutator_norm(shape)?)
    } else {
        None
    };
    Ok(CoherenceReport {
        dominant_outcome,
        dominant_probability: dominant.probability,
        protocol_post_fidelity,
        baseline_cross_count_coherence: cross,
        counting_parity_commutator,
    })
}

const SIGMA_X: [Complex64; 4] = [
    Complex64::new(0.0, 0.0),
    Complex64::new(1.0, 0.0),
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 0.0),
];

const SIGMA_Z: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 0.0),
    Complex64::new(0.0, 0.0),
    Complex64::new(-1.0, 0.0),
];

/// Expectation values of the complete-graph stabilizers
/// K_i = sigma_x(i) prod_{j != i} sigma_z(j).
pub fn complete_graph_stabilizer_expectations(state: &QuditState) -> Result<Vec<f64>> {
    let shape = state.shape();
    if shape.d() != 2 {
        return Err(Error::RequiresQubits(shape.d()));
    }
    (0..shape.n_sites())
        .map(|i| {
            let mut transformed = state.apply_single_site(i, &SIGMA_X)?;
            for j in 0..shape.n_sites() {
                if j != i {
                    transformed = transformed.apply_single_site(j, &SIGMA_Z)?;
                }
            }
            Ok(state.inner(&transformed)?.re)
        })
        .collect()
}

/// Prepares |+>^n, applies the collective phase gate over all sites, and
/// returns the complete-graph stabilizer expectations of the result. All
/// of them equal 1 exactly when the gate acts as the full pairwise
/// controlled-Z network.
pub fn cluster_generation_check(n_sites: usize) -> Result<Vec<f64>> {
    let shape = crate::register::RegisterShape::system(2, n_sites)?;
    let plus = QuditState::uniform_product(shape, AxisKet::new(Axis::X, 0))?;
    let support: Vec<usize> = (0..n_sites).collect();
    let entangled = collective_phase_unitary(&plus, &support)?;
    complete_graph_stabilizer_expectations(&entangled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::register::RegisterShape;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn plus_plus_splits_into_bell_branches() {
        let shape = RegisterShape::system(2, 2).unwrap();
        let plus = QuditState::uniform_product(shape, AxisKet::new(Axis::X, 0)).unwrap();
        let dist = parity_distribution(&plus).unwrap();
        assert_eq!(dist.len(), 2);
        assert_abs_diff_eq!(dist[0].probability, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(dist[1].probability, 0.5, epsilon = 1e-12);
        assert_eq!(dist[0].eigenvalue, c(1.0, 0.0));
        assert_eq!(dist[1].eigenvalue, c(-1.0, 0.0));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let even = dist[0].post_state.as_ref().unwrap();
        let odd = dist[1].post_state.as_ref().unwrap();
        let expect_even =
            QuditState::from_amplitudes(shape, vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)])
                .unwrap();
        let expect_odd =
            QuditState::from_amplitudes(shape, vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)])
                .unwrap();
        assert!(even.max_amp_diff(&expect_even).unwrap() <= 1e-12);
        assert!(odd.max_amp_diff(&expect_odd).unwrap() <= 1e-12);
    }

    #[test]
    fn basis_states_measure_deterministically_and_survive() {
        let shape = RegisterShape::system(2, 3).unwrap();
        for idx in 0..shape.dim() {
            let digits = shape.digits_of(idx);
            let parity: usize = digits.iter().sum::<usize>() % 2;
            let state = QuditState::basis(shape, &digits).unwrap();
            let dist = parity_distribution(&state).unwrap();
            assert_abs_diff_eq!(dist[parity].probability, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(dist[1 - parity].probability, 0.0, epsilon = 1e-12);
            assert!(dist[1 - parity].post_state.is_none());
            let post = dist[parity].post_state.as_ref().unwrap();
            assert!(post.max_amp_diff(&state).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn probe_labels_flip_with_the_preparation() {
        // (|01> + |10>)/sqrt(2) has odd parity: a |0^x> probe reads out -1
        // (label 1), a |1^x> probe reads out +1 (label 0)
        let shape = RegisterShape::system(2, 2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let odd_state =
            QuditState::from_amplitudes(shape, vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)])
                .unwrap();
        let with_zero = parity_branches(&odd_state, 0).unwrap();
        assert_abs_diff_eq!(with_zero[1].record.probability, 1.0, epsilon = 1e-12);
        assert_eq!(with_zero[1].probe_label, 1);
        let with_one = parity_branches(&odd_state, 1).unwrap();
        assert_abs_diff_eq!(with_one[1].record.probability, 1.0, epsilon = 1e-12);
        assert_eq!(with_one[1].probe_label, 0);
        // parity statistics agree branch by branch
        for (a, b) in with_zero.iter().zip(&with_one) {
            assert_eq!(a.record.outcome, b.record.outcome);
            assert_abs_diff_eq!(a.record.probability, b.record.probability, epsilon = 1e-12);
        }
    }

    #[test]
    fn measure_parity_rejects_non_x_probes() {
        let shape = RegisterShape::system(2, 2).unwrap();
        let state = QuditState::random(shape, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = measure_parity(&state, AxisKet::new(Axis::Z, 0), &mut rng).unwrap_err();
        assert!(matches!(err, Error::ProbeAxisNotX(Axis::Z)));
    }

    #[test]
    fn protocol_matches_dense_projector_oracle() {
        for n in 1..=5 {
            let shape = RegisterShape::system(2, n).unwrap();
            for seed in 0..10 {
                let state = QuditState::random(shape, 1000 + seed);
                let protocol = parity_distribution(&state).unwrap();
                let reference = oracle::parity_reference_distribution(&state).unwrap();
                for (p, r) in protocol.iter().zip(&reference) {
                    assert_abs_diff_eq!(p.probability, r.probability, epsilon = 1e-10);
                    match (&p.post_state, &r.post_state) {
                        (Some(a), Some(b)) => {
                            assert!(a.max_amp_diff(b).unwrap() <= 1e-10);
                        }
                        (None, None) => {}
                        _ => panic!("post-state presence mismatch"),
                    }
                }
            }
        }
    }

    #[test]
    fn qudit_protocol_matches_dense_projector_oracle() {
        for d in [3usize, 4, 5] {
            let shape = RegisterShape::system(d, 2).unwrap();
            for seed in 0..5 {
                let state = QuditState::random(shape, 2000 + seed);
                let protocol = parity_distribution(&state).unwrap();
                let reference = oracle::parity_reference_distribution(&state).unwrap();
                for (p, r) in protocol.iter().zip(&reference) {
                    assert_abs_diff_eq!(p.probability, r.probability, epsilon = 1e-10);
                    if let (Some(a), Some(b)) = (&p.post_state, &r.post_state) {
                        assert!(a.max_amp_diff(b).unwrap() <= 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn pairwise_route_agrees_with_weight_route_on_qubits() {
        let shape = RegisterShape::system(2, 4).unwrap();
        let state = QuditState::random(shape, 5);
        let table = parity_branches(&state, 0).unwrap();
        let gates = parity_branches_pairwise(&state, 0).unwrap();
        for (a, b) in table.iter().zip(&gates) {
            assert_abs_diff_eq!(a.record.probability, b.record.probability, epsilon = 1e-12);
            if let (Some(x), Some(y)) = (&a.record.post_state, &b.record.post_state) {
                assert!(x.max_amp_diff(y).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn sampled_outcomes_are_deterministic_per_seed() {
        let shape = RegisterShape::system(2, 3).unwrap();
        let state = QuditState::random(shape, 9);
        let mut rng_a = ChaCha8Rng::seed_from_u64(4);
        let mut rng_b = ChaCha8Rng::seed_from_u64(4);
        let probe = AxisKet::new(Axis::X, 0);
        for _ in 0..8 {
            let a = measure_parity(&state, probe, &mut rng_a).unwrap();
            let b = measure_parity(&state, probe, &mut rng_b).unwrap();
            assert_eq!(a.record.outcome, b.record.outcome);
            assert_eq!(a.probe_label, b.probe_label);
        }
    }

    #[test]
    fn destructive_baseline_counts_and_collapses() {
        let shape = RegisterShape::system(2, 4).unwrap();
        let state = QuditState::random(shape, 31);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let out = destructive_parity_baseline(&state, &mut rng).unwrap();
            assert_eq!(out.parity_label, out.n_minus % 2);
            // collapsed state is a single basis vector
            let nonzero = out
                .collapsed
                .amps()
                .iter()
                .filter(|a| a.norm() > 0.0)
                .count();
            assert_eq!(nonzero, 1);
        }
    }

    #[test]
    fn coherence_survives_the_protocol_but_not_the_baseline() {
        let shape = RegisterShape::system(2, 2).unwrap();
        // alpha |00> + beta |11>, an even-parity superposition
        let alpha = c(0.6, 0.0);
        let beta = c(0.0, 0.8);
        let state = QuditState::from_amplitudes(
            shape,
            vec![alpha, c(0.0, 0.0), c(0.0, 0.0), beta],
        )
        .unwrap();
        let report = coherence_report(&state).unwrap();
        assert_eq!(report.dominant_outcome, 0);
        assert_abs_diff_eq!(report.dominant_probability, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.protocol_post_fidelity, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(report.baseline_cross_count_coherence, 0.0, epsilon = 1e-12);
        assert_eq!(report.counting_parity_commutator, Some(0.0));
    }

    #[test]
    fn two_qubit_cluster_state_matches_by_hand_result() {
        // CZ |++> = (|0+> + |1->)/sqrt(2)
        let shape = RegisterShape::system(2, 2).unwrap();
        let plus = QuditState::uniform_product(shape, AxisKet::new(Axis::X, 0)).unwrap();
        let entangled = collective_phase_unitary(&plus, &[0, 1]).unwrap();
        let expect = QuditState::from_amplitudes(
            shape,
            vec![c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(-0.5, 0.0)],
        )
        .unwrap();
        assert!(entangled.max_amp_diff(&expect).unwrap() <= 1e-12);
        for k in cluster_generation_check(2).unwrap() {
            assert_abs_diff_eq!(k, 1.0, epsilon = 1e-12);
        }
        // before the gate the stabilizers average to zero
        for k in complete_graph_stabilizer_expectations(&plus).unwrap() {
            assert_abs_diff_eq!(k, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn branch_probabilities_sum_to_one() {
        for (d, n) in [(2usize, 5usize), (3, 3), (4, 2)] {
            let shape = RegisterShape::system(d, n).unwrap();
            let state = QuditState::random(shape, (d * 100 + n) as u64);
            let dist = parity_distribution(&state).unwrap();
            let total: f64 = dist.iter().map(|r| r.probability).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        }
    }
}
