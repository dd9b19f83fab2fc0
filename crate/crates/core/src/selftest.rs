//! Built-in verification suite: ten independent checks, each pitting the
//! production measurement paths against brute-force references or exact
//! algebraic identities. Every check is seeded, so its detail string is
//! identical from run to run; wall-clock time is reported separately so
//! that consumers can keep their output byte-stable by omitting it.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::collective::{all_pairs, DiagonalUnitary};
use crate::error::Result;
use crate::ion::{
    collective_target, exp_i_jz, exp_i_jz2, lower_collective_phase, optimize_sequence,
    pulse_matrix, schedule_protocol, simulate_schedule, verify_sequence, PulsePrimitive,
};
use crate::oracle;
use crate::pauli::{pauli_distribution, PauliGroupElement};
use crate::protocol::{
    cluster_generation_check, coherence_report, parity_branches, parity_branches_pairwise,
    parity_distribution,
};
use crate::register::{Axis, QuditState, RegisterShape};
use crate::tol;

/// Outcome of one verification check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    /// Stable machine-readable identifier.
    pub name: &'static str,
    pub passed: bool,
    /// Human-readable findings; contains only numbers that are functions
    /// of fixed seeds, never timings or machine-dependent values.
    pub detail: String,
    /// Wall-clock duration; excluded from `detail` on purpose.
    pub millis: u128,
}

fn run_check(name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    let start = Instant::now();
    let (passed, detail) = match body() {
        Ok(pair) => pair,
        Err(e) => (false, format!("check aborted: {e}")),
    };
    CheckResult {
        name,
        passed,
        detail,
        millis: start.elapsed().as_millis(),
    }
}

fn max_record_deviation(
    got_prob: f64,
    want_prob: f64,
    got_post: Option<&QuditState>,
    want_post: Option<&QuditState>,
) -> Result<f64> {
    let mut delta = (got_prob - want_prob).abs();
    if let (Some(a), Some(b)) = (got_post, want_post) {
        delta = delta.max(a.max_amp_diff(b)?);
    }
    Ok(delta)
}

/// The closed-form weight table and the explicit pairwise gate network
/// must imprint identical phases on every basis state, with zero error.
pub fn check_entangler_network_agreement() -> CheckResult {
    run_check("entangler-weight-network-agreement", || {
        let mut max_delta = 0.0f64;
        for n in 1..=12 {
            let shape = RegisterShape::system(2, n)?;
            let sites: Vec<usize> = (0..n).collect();
            let table = DiagonalUnitary::collective(shape, &sites)?.phases();
            let network = DiagonalUnitary::from_pairs(shape, &all_pairs(&sites))?.phases();
            for (a, b) in table.iter().zip(&network) {
                max_delta = max_delta.max((a - b).norm());
            }
        }
        Ok((
            max_delta <= tol::NETWORK_EXACT,
            format!("registers up to 12 sites, max phase deviation {max_delta:.3e}"),
        ))
    })
}

/// The probe protocol must reproduce the dense spectral-projector
/// measurement: same probabilities, same post-measurement states.
pub fn check_protocol_projector_agreement() -> CheckResult {
    run_check("protocol-projector-agreement", || {
        let mut max_delta = 0.0f64;
        let mut count = 0usize;
        for n in 1..=8 {
            let shape = RegisterShape::system(2, n)?;
            for seed in 0..200u64 {
                let state = QuditState::random(shape, n as u64 * 1000 + seed);
                let got = parity_distribution(&state)?;
                let want = oracle::parity_reference_distribution(&state)?;
                for (g, w) in got.iter().zip(&want) {
                    max_delta = max_delta.max(max_record_deviation(
                        g.probability,
                        w.probability,
                        g.post_state.as_ref(),
                        w.post_state.as_ref(),
                    )?);
                }
                count += 1;
            }
        }
        Ok((
            max_delta <= tol::ROUTE_AGREEMENT,
            format!("{count} random states (200 per size, 1..=8 sites), max deviation {max_delta:.3e}"),
        ))
    })
}

/// Preparing the probe in either x-basis ket must leave the outcome
/// statistics and post-states untouched; only the readout label shifts.
pub fn check_probe_preparation_duality() -> CheckResult {
    run_check("probe-preparation-duality", || {
        let mut max_delta = 0.0f64;
        let mut labels_ok = true;
        for i in 0..50usize {
            let n = 1 + (i % 6);
            let shape = RegisterShape::system(2, n)?;
            let state = QuditState::random(shape, 5000 + i as u64);
            let plain = parity_branches(&state, 0)?;
            let flipped = parity_branches(&state, 1)?;
            for (a, b) in plain.iter().zip(&flipped) {
                labels_ok &= a.probe_label == a.record.outcome;
                labels_ok &= b.probe_label == (b.record.outcome + 1) % 2;
                max_delta = max_delta.max(max_record_deviation(
                    a.record.probability,
                    b.record.probability,
                    a.record.post_state.as_ref(),
                    b.record.post_state.as_ref(),
                )?);
            }
        }
        Ok((
            labels_ok && max_delta <= tol::PROBABILITY_SLACK,
            format!(
                "50 states, labels shifted correctly: {labels_ok}, max statistics deviation {max_delta:.3e}"
            ),
        ))
    })
}

/// On a superposition of the all-ground and all-excited states, the probe
/// measurement must keep the superposition coherent (unit fidelity with the
/// exact sector projection), whereas destructive excitation counting leaves
/// a classical mixture, even though the two observables commute exactly.
pub fn check_conditional_coherence() -> CheckResult {
    run_check("conditional-coherence", || {
        let shape = RegisterShape::system(2, 2)?;
        let mut rng = ChaCha8Rng::seed_from_u64(314159);
        let mut max_fidelity_loss = 0.0f64;
        let mut max_baseline = 0.0f64;
        let mut max_commutator = 0.0f64;
        for _ in 0..20 {
            let mut draw = || {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            };
            let (alpha, beta) = (draw(), draw());
            let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
            let zero = Complex64::new(0.0, 0.0);
            let state = QuditState::from_amplitudes(
                shape,
                vec![alpha / norm, zero, zero, beta / norm],
            )?;
            let report = coherence_report(&state)?;
            max_fidelity_loss =
                max_fidelity_loss.max((report.protocol_post_fidelity - 1.0).abs());
            max_baseline = max_baseline.max(report.baseline_cross_count_coherence);
            if let Some(c) = report.counting_parity_commutator {
                max_commutator = max_commutator.max(c);
            }
        }
        for n in 1..=8 {
            let comm = oracle::excitation_parity_commutator_norm(RegisterShape::system(2, n)?)?;
            max_commutator = max_commutator.max(comm);
        }
        let passed = max_fidelity_loss <= tol::ROUTE_AGREEMENT
            && max_baseline <= tol::ROUTE_AGREEMENT
            && max_commutator <= tol::NETWORK_EXACT;
        Ok((
            passed,
            format!(
                "20 two-site superpositions: max fidelity loss {max_fidelity_loss:.3e}, \
                 max baseline cross-count coherence {max_baseline:.3e}, \
                 max counting/parity commutator {max_commutator:.3e} (1..=8 sites)"
            ),
        ))
    })
}

/// The single-probe protocol must agree with the textbook alternative that
/// walks a probe through one controlled flip per site.
pub fn check_sequential_flip_route() -> CheckResult {
    run_check("sequential-flip-route", || {
        let mut max_delta = 0.0f64;
        let mut count = 0usize;
        for n in 1..=6 {
            let shape = RegisterShape::system(2, n)?;
            for seed in 0..34u64 {
                let state = QuditState::random(shape, n as u64 * 333 + seed);
                let got = parity_distribution(&state)?;
                let want = oracle::sequential_cnot_distribution(&state)?;
                for (g, w) in got.iter().zip(&want) {
                    max_delta = max_delta.max(max_record_deviation(
                        g.probability,
                        w.probability,
                        g.post_state.as_ref(),
                        w.post_state.as_ref(),
                    )?);
                }
                count += 1;
            }
        }
        Ok((
            max_delta <= tol::ROUTE_AGREEMENT,
            format!("{count} random states, 1..=6 sites, max deviation {max_delta:.3e}"),
        ))
    })
}

/// Staged measurement of arbitrary axis strings must match the dense
/// controlled-string oracle, and maximally entangled pairs must show their
/// textbook correlations.
pub fn check_pauli_element_measurement() -> CheckResult {
    run_check("pauli-element-measurement", || {
        // deterministic spot checks on the maximally entangled pair
        let shape2 = RegisterShape::system(2, 2)?;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let zero = Complex64::new(0.0, 0.0);
        let bell = QuditState::from_amplitudes(
            shape2,
            vec![Complex64::new(s, 0.0), zero, zero, Complex64::new(s, 0.0)],
        )?;
        let mut spot_delta = 0.0f64;
        for (text, certain_outcome) in [("XX", 0usize), ("YY", 1), ("ZZ", 0)] {
            let element = PauliGroupElement::parse(text)?;
            let dist = pauli_distribution(&bell, &element)?;
            spot_delta = spot_delta.max((dist[certain_outcome].probability - 1.0).abs());
        }
        // randomized cross-validation against the dense oracle
        let mut rng = ChaCha8Rng::seed_from_u64(271828);
        let mut max_delta = 0.0f64;
        let mut count = 0usize;
        for i in 0..200usize {
            let n = 1 + (i % 6);
            let shape = RegisterShape::system(2, n)?;
            let state = QuditState::random(shape, 9000 + i as u64);
            let axes = loop {
                let candidate: Vec<Option<Axis>> = (0..n)
                    .map(|_| match rng.random_range(0..4u8) {
                        0 => Some(Axis::X),
                        1 => Some(Axis::Y),
                        2 => Some(Axis::Z),
                        _ => None,
                    })
                    .collect();
                if candidate.iter().any(Option::is_some) {
                    break candidate;
                }
            };
            let element = PauliGroupElement::new(axes.clone())?;
            let got = pauli_distribution(&state, &element)?;
            let want = oracle::pauli_reference_distribution(&state, &axes)?;
            for (g, w) in got.iter().zip(&want) {
                max_delta = max_delta.max(max_record_deviation(
                    g.probability,
                    w.probability,
                    g.post_state.as_ref(),
                    w.post_state.as_ref(),
                )?);
            }
            count += 1;
        }
        let passed = spot_delta <= tol::PROBABILITY_SLACK && max_delta <= tol::ROUTE_AGREEMENT;
        Ok((
            passed,
            format!(
                "entangled-pair spot checks deviate {spot_delta:.3e}; \
                 {count} random string measurements deviate {max_delta:.3e}"
            ),
        ))
    })
}

/// The protocol must hold for higher-dimensional sites, and at d = 2 the
/// general gate-network route must coincide with the qubit route exactly.
pub fn check_qudit_generalization() -> CheckResult {
    run_check("qudit-generalization", || {
        let mut max_delta = 0.0f64;
        let mut count = 0usize;
        for d in [2usize, 3, 4] {
            for n in 1..=4 {
                let shape = RegisterShape::system(d, n)?;
                for seed in 0..25u64 {
                    let state = QuditState::random(shape, d as u64 * 7919 + n as u64 * 101 + seed);
                    let got = parity_distribution(&state)?;
                    let want = oracle::parity_reference_distribution(&state)?;
                    for (g, w) in got.iter().zip(&want) {
                        max_delta = max_delta.max(max_record_deviation(
                            g.probability,
                            w.probability,
                            g.post_state.as_ref(),
                            w.post_state.as_ref(),
                        )?);
                    }
                    count += 1;
                }
            }
        }
        // the two entangling routes must agree bit-for-bit on qubits
        let mut route_delta = 0.0f64;
        for n in 1..=6 {
            let shape = RegisterShape::system(2, n)?;
            for seed in 0..5u64 {
                let state = QuditState::random(shape, 60_000 + n as u64 * 10 + seed);
                let a = parity_branches(&state, 0)?;
                let b = parity_branches_pairwise(&state, 0)?;
                for (x, y) in a.iter().zip(&b) {
                    route_delta = route_delta.max(max_record_deviation(
                        x.record.probability,
                        y.record.probability,
                        x.record.post_state.as_ref(),
                        y.record.post_state.as_ref(),
                    )?);
                }
            }
        }
        let passed = max_delta <= tol::ROUTE_AGREEMENT && route_delta <= tol::PROBABILITY_SLACK;
        Ok((
            passed,
            format!(
                "{count} states over d in {{2, 3, 4}}: max oracle deviation {max_delta:.3e}; \
                 qubit route split {route_delta:.3e}"
            ),
        ))
    })
}

/// The pulse lowering must reproduce the entangler matrix, its rotation
/// sandwiches must obey the generator-exchange identities, and a simulated
/// two-zone schedule must reproduce the gate-level protocol.
pub fn check_pulse_compiler() -> CheckResult {
    run_check("pulse-compiler", || {
        let half = std::f64::consts::FRAC_PI_2;
        let mut max_distance = 0.0f64;
        for n in 2..=8 {
            let naive = lower_collective_phase(n)?;
            let target = collective_target(n)?;
            let optimized = optimize_sequence(&naive);
            for seq in [&naive, &optimized] {
                let report = verify_sequence(seq, &target)?;
                max_distance = max_distance.max(report.absolute_distance);
            }
        }
        let mut max_sandwich = 0.0f64;
        for n in 1..=8 {
            let up = pulse_matrix(
                &PulsePrimitive::GlobalRot {
                    alpha: 0.0,
                    beta: half,
                },
                n,
            )?;
            let down = pulse_matrix(
                &PulsePrimitive::GlobalRot {
                    alpha: 0.0,
                    beta: -half,
                },
                n,
            )?;
            for chi in [half, half / 2.0, 1.0] {
                let squeeze = pulse_matrix(&PulsePrimitive::GlobalJx2 { chi }, n)?;
                let got = up.matmul(&squeeze)?.matmul(&down)?;
                max_sandwich = max_sandwich.max(got.max_abs_diff(&exp_i_jz2(chi, n)?)?);
                let kick = pulse_matrix(
                    &PulsePrimitive::GlobalRot {
                        alpha: chi,
                        beta: 0.0,
                    },
                    n,
                )?;
                let got = up.matmul(&kick)?.matmul(&down)?;
                max_sandwich = max_sandwich.max(got.max_abs_diff(&exp_i_jz(chi, n)?)?);
            }
        }
        let mut max_schedule = 0.0f64;
        let shape = RegisterShape::system(2, 2)?;
        for probe_label in 0..2usize {
            let schedule = schedule_protocol(2, probe_label)?;
            for seed in 0..3u64 {
                let state = QuditState::random(shape, 70_000 + seed);
                let simulated = simulate_schedule(&schedule, &state)?;
                let reference = parity_branches(&state, probe_label)?;
                for (g, w) in simulated.iter().zip(&reference) {
                    max_schedule = max_schedule.max(max_record_deviation(
                        g.record.probability,
                        w.record.probability,
                        g.record.post_state.as_ref(),
                        w.record.post_state.as_ref(),
                    )?);
                }
            }
        }
        let passed = max_distance <= tol::COMPILER_DISTANCE
            && max_sandwich <= tol::ROUTE_AGREEMENT
            && max_schedule <= tol::COMPILER_DISTANCE;
        Ok((
            passed,
            format!(
                "lowering distance {max_distance:.3e} (2..=8 ions); \
                 generator-exchange deviation {max_sandwich:.3e} (1..=8 ions); \
                 simulated schedule deviation {max_schedule:.3e}"
            ),
        ))
    })
}

/// Applying the entangler to a uniform superposition must produce the
/// complete-graph stabilizer state: every stabilizer expectation hits one.
pub fn check_cluster_stabilizers() -> CheckResult {
    run_check("cluster-stabilizers", || {
        let mut max_loss = 0.0f64;
        for n in 2..=10 {
            for e in cluster_generation_check(n)? {
                max_loss = max_loss.max((e - 1.0).abs());
            }
        }
        Ok((
            max_loss <= tol::ROUTE_AGREEMENT,
            format!("2..=10 sites, max stabilizer expectation loss {max_loss:.3e}"),
        ))
    })
}

fn peak_rss_kb() -> Option<u64> {
    let text = std::fs::read_to_string("/proc/self/status").ok()?;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("VmHWM:") {
            return rest.trim().strip_suffix("kB").map(str::trim)?.parse().ok();
        }
    }
    None
}

/// A twenty-site register (plus probe) must run through the full protocol
/// with the exact probability budget intact and modest memory, and its
/// sector probabilities must match the matrix-free reference.
pub fn check_scale_smoke() -> CheckResult {
    run_check("scale-smoke", || {
        const RSS_LIMIT_KB: u64 = 1024 * 1024; // one gibibyte
        let shape = RegisterShape::system(2, 20)?;
        let state = QuditState::random(shape, 424_242);
        let dist = parity_distribution(&state)?;
        let total: f64 = dist.iter().map(|r| r.probability).sum();
        let sum_defect = (total - 1.0).abs();
        let reference = oracle::parity_sector_probabilities(&state);
        let mut max_delta = 0.0f64;
        for (r, p) in dist.iter().zip(&reference) {
            max_delta = max_delta.max((r.probability - p).abs());
        }
        let rss = peak_rss_kb();
        let rss_ok = rss.map_or(true, |kb| kb < RSS_LIMIT_KB);
        let passed = sum_defect <= 1e-9 && max_delta <= 1e-9 && rss_ok;
        Ok((
            passed,
            format!(
                "20-site register: probability sum defect {sum_defect:.3e}, \
                 matrix-free reference deviation {max_delta:.3e}, \
                 peak memory under budget: {rss_ok}"
            ),
        ))
    })
}

/// Runs every check in a fixed order.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        check_entangler_network_agreement(),
        check_protocol_projector_agreement(),
        check_probe_preparation_duality(),
        check_conditional_coherence(),
        check_sequential_flip_route(),
        check_pauli_element_measurement(),
        check_qudit_generalization(),
        check_pulse_compiler(),
        check_cluster_stabilizers(),
        check_scale_smoke(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_check_passes_with_unique_names() {
        let results = run_all();
        assert_eq!(results.len(), 10);
        for result in &results {
            assert!(
                result.passed,
                "{} failed: {}",
                result.name, result.detail
            );
            assert!(!result.detail.is_empty());
        }
        let mut names: Vec<&str> = results.iter().map(|r| r.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), results.len());
    }

    #[test]
    fn details_are_identical_across_reruns() {
        assert_eq!(
            check_probe_preparation_duality().detail,
            check_probe_preparation_duality().detail
        );
        assert_eq!(
            check_cluster_stabilizers().detail,
            check_cluster_stabilizers().detail
        );
    }
}
