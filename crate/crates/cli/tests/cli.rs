//! End-to-end command tests driven through the argument-parsing entry
//! point, covering report shapes, exit codes, byte determinism, and the
//! environment guard.

use parity_probe_cli::{run, CliOutcome, MAX_QUBITS_ENV};
use serde_json::Value;

fn invoke(args: &[&str]) -> CliOutcome {
    let mut argv = vec!["parity-probe"];
    argv.extend_from_slice(args);
    run(argv)
}

fn parse_stdout(outcome: &CliOutcome) -> Value {
    serde_json::from_str(&outcome.stdout).expect("stdout must be JSON")
}

/// (|00> + |01>)/sqrt(2): even and odd parity each with probability 1/2.
const SPLIT_STATE: &str = "{\"d\": 2, \"n\": 2, \"probe\": false, \"amps\": \
    [[0.7071067811865476, 0.0], [0.7071067811865476, 0.0], [0.0, 0.0], [0.0, 0.0]]}";

/// (|00> + |11>)/sqrt(2): deterministic correlations for axis strings.
const BELL_STATE: &str = "{\"d\": 2, \"n\": 2, \"probe\": false, \"amps\": \
    [[0.7071067811865476, 0.0], [0.0, 0.0], [0.0, 0.0], [0.7071067811865476, 0.0]]}";

#[test]
fn parity_reports_the_exact_distribution() {
    let outcome = invoke(&["parity", "--state", SPLIT_STATE]);
    assert_eq!(outcome.code, 0, "stderr: {}", outcome.stderr);
    let report = parse_stdout(&outcome);
    assert_eq!(report["command"], "parity");
    assert_eq!(report["d"], 2);
    assert_eq!(report["n"], 2);
    assert!(report["samples"].is_null());
    let records = report["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    for (k, record) in records.iter().enumerate() {
        assert_eq!(record["outcome"], k as u64);
        let prob = record["prob"].as_f64().unwrap();
        assert!((prob - 0.5).abs() <= 1e-12);
        assert!(record["post"].is_null());
    }
}

#[test]
fn post_states_appear_only_on_request() {
    let outcome = invoke(&["parity", "--state", SPLIT_STATE, "--emit-post-states"]);
    assert_eq!(outcome.code, 0);
    let report = parse_stdout(&outcome);
    for record in report["records"].as_array().unwrap() {
        let post = &record["post"];
        assert!(post.is_object());
        assert_eq!(post["n"], 2);
        assert_eq!(post["probe"], false);
    }
}

#[test]
fn sampling_is_seeded_and_counts_match_shots() {
    let outcome = invoke(&[
        "parity", "--state", SPLIT_STATE, "--shots", "1000", "--seed", "7",
    ]);
    assert_eq!(outcome.code, 0);
    let report = parse_stdout(&outcome);
    let counts: Vec<u64> = report["samples"]["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(counts.iter().sum::<u64>(), 1000);
    // both outcomes carry probability 1/2; 1000 draws cannot plausibly
    // miss one side entirely
    assert!(counts.iter().all(|&c| c > 0));
    let freqs: Vec<f64> = report["samples"]["freqs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (c, f) in counts.iter().zip(&freqs) {
        assert!((*c as f64 / 1000.0 - f).abs() <= 1e-15);
    }
}

#[test]
fn repeated_runs_emit_identical_bytes() {
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "parity", "--state", SPLIT_STATE, "--shots", "500", "--seed", "11",
            "--emit-post-states",
        ],
        vec!["pauli", "--state", BELL_STATE, "--element", "XX"],
        vec!["qudit-parity", "--state", SPLIT_STATE],
        vec!["compile", "--n", "4"],
        vec!["schedule", "--n", "3", "--probe-label", "1"],
        vec!["selftest"],
    ];
    for args in commands {
        let first = invoke(&args);
        let second = invoke(&args);
        assert_eq!(first.code, 0, "{args:?} stderr: {}", first.stderr);
        assert_eq!(first, second, "non-deterministic output for {args:?}");
        assert!(!first.stdout.is_empty());
    }
}

#[test]
fn pauli_reports_bell_correlations() {
    for (element, certain) in [("XX", 0u64), ("YY", 1), ("ZZ", 0)] {
        let outcome = invoke(&["pauli", "--state", BELL_STATE, "--element", element]);
        assert_eq!(outcome.code, 0, "stderr: {}", outcome.stderr);
        let report = parse_stdout(&outcome);
        assert_eq!(report["element"], element);
        let records = report["records"].as_array().unwrap();
        let prob = records[certain as usize]["prob"].as_f64().unwrap();
        assert!((prob - 1.0).abs() <= 1e-12, "{element}: {prob}");
    }
}

#[test]
fn qudit_parity_handles_higher_level_counts() {
    // |2> on a single three-level site: parity outcome 2 is certain
    let state = "{\"d\": 3, \"n\": 1, \"probe\": false, \"amps\": \
        [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]}";
    let outcome = invoke(&["qudit-parity", "--state", state]);
    assert_eq!(outcome.code, 0, "stderr: {}", outcome.stderr);
    let report = parse_stdout(&outcome);
    let records = report["records"].as_array().unwrap();
    assert_eq!(records.len(), 3);
    assert!((records[2]["prob"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    // the plain parity command refuses the same input
    let refused = invoke(&["parity", "--state", state]);
    assert_eq!(refused.code, 1);
    assert!(refused.stderr.contains("qudit-parity"));
}

#[test]
fn compile_output_passes_verify() {
    let compiled = invoke(&["compile", "--n", "3"]);
    assert_eq!(compiled.code, 0);
    let sequence_text = compiled.stdout.trim().to_string();
    let report = parse_stdout(&compiled);
    assert_eq!(report["n_system"], 3);
    assert_eq!(report["probe"], false);
    assert_eq!(report["pulses"].as_array().unwrap().len(), 4);

    let verified = invoke(&["verify", "--state", &sequence_text]);
    assert_eq!(verified.code, 0, "stderr: {}", verified.stderr);
    let verdict = parse_stdout(&verified);
    assert_eq!(verdict["passed"], true);
    assert!(verdict["absolute_distance"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn verify_flags_a_wrong_sequence_with_exit_two() {
    let wrong = "{\"init_zones\": {\"system\": \"interaction\"}, \"n_system\": 2, \
        \"probe\": false, \"pulses\": [{\"kind\": \"global_rot\", \"alpha\": 0.25, \
        \"beta\": 0.0}], \"global_phase\": [1.0, 0.0]}";
    let outcome = invoke(&["verify", "--state", wrong]);
    assert_eq!(outcome.code, 2);
    let report = parse_stdout(&outcome);
    assert_eq!(report["passed"], false);
    assert!(outcome.stderr.contains("verification failed"));
    // a generous tolerance turns the same input into a pass
    let relaxed = invoke(&["verify", "--state", wrong, "--tol", "100.0"]);
    assert_eq!(relaxed.code, 0);
}

#[test]
fn schedule_emits_the_two_zone_program() {
    let outcome = invoke(&["schedule", "--n", "2"]);
    assert_eq!(outcome.code, 0);
    let report = parse_stdout(&outcome);
    assert_eq!(report["probe"], true);
    assert_eq!(report["init_zones"]["probe"], "storage");
    assert_eq!(report["init_zones"]["system"], "interaction");
    let pulses = report["pulses"].as_array().unwrap();
    assert_eq!(pulses[0]["kind"], "probe_prep");
    assert_eq!(pulses.last().unwrap()["kind"], "probe_measure");
    let moves: Vec<&str> = pulses
        .iter()
        .filter(|p| p["kind"] == "move_probe")
        .map(|p| p["zone"].as_str().unwrap())
        .collect();
    assert_eq!(moves, vec!["interaction", "storage"]);
}

#[test]
fn selftest_reports_every_check_without_timings() {
    let outcome = invoke(&["selftest"]);
    assert_eq!(outcome.code, 0, "stderr: {}", outcome.stderr);
    let report = parse_stdout(&outcome);
    assert_eq!(report["passed"], true);
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 10);
    for check in checks {
        assert_eq!(check["passed"], true, "{}", check["name"]);
        assert!(check.get("millis").is_none());
        assert!(!check["detail"].as_str().unwrap().is_empty());
    }
}

#[test]
fn validation_failures_exit_one_with_context() {
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["parity", "--state", "{not json"], "json"),
        (
            vec!["parity", "--state", "/nonexistent/state.json"],
            "cannot read",
        ),
        (vec!["parity", "--state", SPLIT_STATE, "--d", "3"], "--d 3"),
        (vec!["parity", "--state", SPLIT_STATE, "--n", "5"], "--n 5"),
        (
            vec!["pauli", "--state", SPLIT_STATE, "--element", "EE"],
            "identity",
        ),
        (
            vec!["pauli", "--state", SPLIT_STATE, "--element", "XQ"],
            "axis character",
        ),
        (
            vec!["pauli", "--state", SPLIT_STATE, "--element", "XXX"],
            "length",
        ),
        (vec!["compile", "--n", "0"], "at least one site"),
        (
            vec!["verify", "--state", SPLIT_STATE],
            "missing field",
        ),
    ];
    for (args, needle) in cases {
        let outcome = invoke(&args);
        assert_eq!(outcome.code, 1, "{args:?} should fail validation");
        assert!(outcome.stdout.is_empty());
        let stderr = outcome.stderr.to_lowercase();
        assert!(
            stderr.contains(&needle.to_lowercase()),
            "{args:?}: expected \"{needle}\" in \"{}\"",
            outcome.stderr
        );
    }
}

#[test]
fn sampled_frequencies_converge_to_the_exact_distribution() {
    let outcome = invoke(&[
        "parity", "--state", SPLIT_STATE, "--shots", "100000", "--seed", "12345",
    ]);
    assert_eq!(outcome.code, 0, "stderr: {}", outcome.stderr);
    let report = parse_stdout(&outcome);
    let records = report["records"].as_array().unwrap();
    let freqs = report["samples"]["freqs"].as_array().unwrap();
    let shots = 100_000.0;
    for (record, freq) in records.iter().zip(freqs) {
        let p = record["prob"].as_f64().unwrap();
        let f = freq.as_f64().unwrap();
        let five_sigma = 5.0 * (p * (1.0 - p) / shots).sqrt();
        assert!(
            (f - p).abs() <= five_sigma,
            "frequency {f} vs probability {p} beyond {five_sigma}"
        );
    }
}

#[test]
fn slightly_drifted_norms_renormalize_with_a_warning() {
    let amp = std::f64::consts::FRAC_1_SQRT_2 * (1.0 + 3e-7);
    let drifted = format!(
        "{{\"d\": 2, \"n\": 1, \"probe\": false, \"amps\": [[{amp:.17e}, 0.0], [{amp:.17e}, 0.0]]}}"
    );
    let outcome = invoke(&["parity", "--state", &drifted]);
    assert_eq!(outcome.code, 0, "stderr: {}", outcome.stderr);
    assert!(outcome.stderr.contains("renormalized"));
    let report = parse_stdout(&outcome);
    for record in report["records"].as_array().unwrap() {
        let prob = record["prob"].as_f64().unwrap();
        assert!((prob - 0.5).abs() <= 1e-9);
    }
    // the warning is part of the deterministic output
    assert_eq!(outcome, invoke(&["parity", "--state", &drifted]));

    let far = std::f64::consts::FRAC_1_SQRT_2 * (1.0 + 5e-4);
    let rejected_state = format!(
        "{{\"d\": 2, \"n\": 1, \"probe\": false, \"amps\": [[{far:.17e}, 0.0], [{far:.17e}, 0.0]]}}"
    );
    let rejected = invoke(&["parity", "--state", &rejected_state]);
    assert_eq!(rejected.code, 1);
    assert!(rejected.stderr.contains("norm"));
}

#[test]
fn compile_respects_the_support_bound_unless_waived() {
    let refused = invoke(&["compile", "--n", "9"]);
    assert_eq!(refused.code, 1);
    assert!(refused.stderr.contains("verification bound"));
    assert!(refused.stderr.contains("--no-verify"));

    let waived = invoke(&["compile", "--n", "9", "--no-verify"]);
    assert_eq!(waived.code, 0, "stderr: {}", waived.stderr);
    let report = parse_stdout(&waived);
    assert_eq!(report["n_system"], 9);
    assert_eq!(report["pulses"].as_array().unwrap().len(), 4);

    // schedules are emission-only programs and carry no bound
    let schedule = invoke(&["schedule", "--n", "9"]);
    assert_eq!(schedule.code, 0, "stderr: {}", schedule.stderr);
}

#[test]
fn probe_carrying_states_are_rejected_as_input() {
    let with_probe = "{\"d\": 2, \"n\": 1, \"probe\": true, \"amps\": [[1.0, 0.0], [0.0, 0.0]]}";
    let outcome = invoke(&["parity", "--state", with_probe]);
    assert_eq!(outcome.code, 1);
    assert!(outcome.stderr.contains("probe"));
}

#[test]
fn verify_rejects_probe_schedules_and_bad_tolerances() {
    let schedule = invoke(&["schedule", "--n", "2"]);
    let text = schedule.stdout.trim().to_string();
    let outcome = invoke(&["verify", "--state", &text]);
    assert_eq!(outcome.code, 1);
    assert!(outcome.stderr.contains("gate-only"));

    let compiled = invoke(&["compile", "--n", "2"]);
    let text = compiled.stdout.trim().to_string();
    let outcome = invoke(&["verify", "--state", &text, "--tol=-1.0"]);
    assert_eq!(outcome.code, 1);
    assert!(outcome.stderr.contains("--tol"));
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = std::env::temp_dir().join(format!("parity-probe-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let path_text = path.to_str().unwrap();
    let written = invoke(&["parity", "--state", SPLIT_STATE, "--out", path_text]);
    assert_eq!(written.code, 0, "stderr: {}", written.stderr);
    assert!(written.stdout.is_empty());
    let direct = invoke(&["parity", "--state", SPLIT_STATE]);
    let file_bytes = std::fs::read_to_string(&path).unwrap();
    assert_eq!(file_bytes, direct.stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn environment_variable_caps_register_size() {
    // the guard only fires on states larger than the configured limit, so
    // concurrent tests with two-site inputs stay unaffected by this value
    std::env::set_var(MAX_QUBITS_ENV, "3");
    let four_sites = "{\"d\": 2, \"n\": 4, \"probe\": false, \"amps\": [\
        [1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], \
        [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], \
        [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], \
        [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]}";
    let rejected = invoke(&["parity", "--state", four_sites]);
    std::env::remove_var(MAX_QUBITS_ENV);
    assert_eq!(rejected.code, 1);
    assert!(rejected.stderr.contains(MAX_QUBITS_ENV));
    let accepted = invoke(&["parity", "--state", four_sites]);
    assert_eq!(accepted.code, 0);
}

#[test]
fn help_and_version_exit_cleanly() {
    let help = invoke(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("parity"));
    assert!(help.stdout.contains("selftest"));
    let version = invoke(&["--version"]);
    assert_eq!(version.code, 0);
    let unknown = invoke(&["transmogrify"]);
    assert_eq!(unknown.code, 1);
    assert!(!unknown.stderr.is_empty());
}
