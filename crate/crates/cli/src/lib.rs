//! Command-line front end: measurement commands that read a register state
//! as JSON and print deterministic JSON reports, plus pulse compilation,
//! schedule emission, sequence verification, and the built-in check suite.
//!
//! Exit codes: 0 on success, 1 on any input or validation problem, 2 when
//! a verification-style command (verify, selftest) runs fine but the thing
//! it verified fails.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use parity_probe::ion::{
    collective_target, lower_collective_phase, lower_collective_phase_unverified,
    optimize_sequence, schedule_protocol, verify_sequence, PulseSequence,
};
use parity_probe::json;
use parity_probe::pauli::{pauli_distribution, PauliGroupElement};
use parity_probe::protocol::{parity_distribution, MeasurementRecord};
use parity_probe::register::QuditState;
use parity_probe::{selftest, tol};

/// Environment variable bounding the site count a measurement command will
/// accept; a guard against accidentally launching multi-gigabyte registers.
pub const MAX_QUBITS_ENV: &str = "PARITY_PROBE_MAX_QUBITS";

const EXIT_OK: i32 = 0;
const EXIT_VALIDATION: i32 = 1;
const EXIT_VERIFY_FAILED: i32 = 2;

/// Everything a command run produces; `main` prints the two streams and
/// exits with `code`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl CliOutcome {
    fn ok(stdout: String) -> Self {
        CliOutcome {
            stdout,
            stderr: String::new(),
            code: EXIT_OK,
        }
    }
}

/// A validation failure: maps to exit code 1 with a message on stderr.
struct Invalid(String);

impl From<parity_probe::Error> for Invalid {
    fn from(e: parity_probe::Error) -> Self {
        Invalid(e.to_string())
    }
}

type CmdResult = Result<CliOutcome, Invalid>;

#[derive(Parser)]
#[command(
    name = "parity-probe",
    version,
    about = "Simulate probe-based parity measurements and compile them to ion pulses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure the joint z-parity of a qubit register
    Parity(MeasureArgs),
    /// Measure an arbitrary axis string (e.g. XXEZY) on a qubit register
    Pauli(PauliArgs),
    /// Measure the generalized parity of a d-level register
    QuditParity(MeasureArgs),
    /// Lower the collective entangler on N ions to global pulses
    Compile(CompileArgs),
    /// Emit the full two-zone probe schedule for an N-ion register
    Schedule(ScheduleArgs),
    /// Check a pulse sequence against the exact entangler matrix
    Verify(VerifyArgs),
    /// Run the built-in verification suite
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct MeasureArgs {
    /// Input state: a file path, or inline JSON if it starts with '{'
    #[arg(long)]
    state: String,
    /// Expected level count; fails if the state disagrees
    #[arg(long)]
    d: Option<usize>,
    /// Expected site count; fails if the state disagrees
    #[arg(long)]
    n: Option<usize>,
    /// Seed for outcome sampling
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of sampled shots; 0 reports the exact distribution only
    #[arg(long, default_value_t = 0)]
    shots: u64,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include post-measurement states in the report
    #[arg(long, default_value_t = false)]
    emit_post_states: bool,
}

#[derive(Args)]
struct PauliArgs {
    /// Axis string, one character per site from {X, Y, Z, E}
    #[arg(long)]
    element: String,
    #[command(flatten)]
    measure: MeasureArgs,
}

#[derive(Args)]
struct CompileArgs {
    /// Number of ions the entangler acts on
    #[arg(long)]
    n: usize,
    /// Emit even when --n is above the dense verification bound
    #[arg(long, default_value_t = false)]
    no_verify: bool,
    /// Write the sequence here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Number of system ions (the probe is extra)
    #[arg(long)]
    n: usize,
    /// x-basis label the probe is prepared in
    #[arg(long, default_value_t = 0)]
    probe_label: usize,
    /// Write the schedule here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Pulse sequence: a file path, or inline JSON if it starts with '{'
    #[arg(long)]
    state: String,
    /// Acceptance threshold on the Frobenius distance to the target
    #[arg(long)]
    tol: Option<f64>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses arguments (the first item must be the binary name) and runs the
/// selected command. Never panics on bad input; everything is reported
/// through the returned outcome.
pub fn run<I, T>(args: I) -> CliOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliOutcome::ok(rendered),
                _ => CliOutcome {
                    stdout: String::new(),
                    stderr: rendered,
                    code: EXIT_VALIDATION,
                },
            };
        }
    };
    let result = match cli.command {
        Command::Parity(args) => run_measurement("parity", &args, None, true),
        Command::Pauli(args) => {
            run_measurement("pauli", &args.measure, Some(&args.element), true)
        }
        Command::QuditParity(args) => run_measurement("qudit-parity", &args, None, false),
        Command::Compile(args) => run_compile(&args),
        Command::Schedule(args) => run_schedule(&args),
        Command::Verify(args) => run_verify(&args),
        Command::Selftest(args) => run_selftest(&args),
    };
    result.unwrap_or_else(|Invalid(message)| CliOutcome {
        stdout: String::new(),
        stderr: format!("error: {message}\n"),
        code: EXIT_VALIDATION,
    })
}

/// Reads `--state`-style input: inline JSON when it starts with '{',
/// otherwise the contents of the file at that path.
fn load_text(input: &str) -> Result<String, Invalid> {
    if input.trim_start().starts_with('{') {
        return Ok(input.to_string());
    }
    std::fs::read_to_string(input)
        .map_err(|e| Invalid(format!("cannot read \"{input}\": {e}")))
}

fn site_limit() -> Result<Option<usize>, Invalid> {
    match std::env::var(MAX_QUBITS_ENV) {
        Ok(text) => text.trim().parse::<usize>().map(Some).map_err(|_| {
            Invalid(format!(
                "{MAX_QUBITS_ENV} must be a non-negative integer, got \"{text}\""
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Invalid(format!("{MAX_QUBITS_ENV} is unreadable: {e}"))),
    }
}

/// Loads and validates a measurement input state. A state whose norm drifts
/// from 1 by no more than `tol::INPUT_NORM_SLACK` is renormalized, and the
/// returned warning line (empty otherwise) says so; larger drifts are
/// rejected.
fn load_measure_state(args: &MeasureArgs) -> Result<(QuditState, String), Invalid> {
    let (shape, mut amps) = json::state_parts_from_json(&load_text(&args.state)?)?;
    if shape.has_probe() {
        return Err(Invalid(
            "input states must not include a probe site; the command adds one".to_string(),
        ));
    }
    if let Some(d) = args.d {
        if d != shape.d() {
            return Err(Invalid(format!(
                "--d {d} does not match the state's level count {}",
                shape.d()
            )));
        }
    }
    if let Some(n) = args.n {
        if n != shape.n_sites() {
            return Err(Invalid(format!(
                "--n {n} does not match the state's site count {}",
                shape.n_sites()
            )));
        }
    }
    if let Some(limit) = site_limit()? {
        if shape.n_sites() > limit {
            return Err(Invalid(format!(
                "state has {} sites, above the {MAX_QUBITS_ENV} limit of {limit}",
                shape.n_sites()
            )));
        }
    }
    let mut warning = String::new();
    if amps.len() == shape.dim() {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let deviation = (norm - 1.0).abs();
        if deviation > tol::INPUT_NORM_SLACK {
            return Err(Invalid(format!(
                "state norm {norm:.9} deviates from 1 by {deviation:.3e}, \
                 beyond the {:.0e} acceptance slack",
                tol::INPUT_NORM_SLACK
            )));
        }
        if deviation > tol::NORM_CONSTRUCT {
            for a in &mut amps {
                *a /= norm;
            }
            warning = format!(
                "warning: input state norm deviated from 1 by {deviation:.3e}; renormalized\n"
            );
        }
    }
    Ok((QuditState::from_amplitudes(shape, amps)?, warning))
}

/// Draws `shots` outcomes i.i.d. from the exact distribution.
fn sample_counts(records: &[MeasurementRecord], shots: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; records.len()];
    for _ in 0..shots {
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
        counts[chosen] += 1;
    }
    counts
}

fn samples_value(records: &[MeasurementRecord], shots: u64, seed: u64) -> Result<Value, Invalid> {
    if shots == 0 {
        return Ok(Value::Null);
    }
    let counts = sample_counts(records, shots, seed);
    let freqs = counts
        .iter()
        .map(|&c| json::number(c as f64 / shots as f64))
        .collect::<parity_probe::Result<Vec<_>>>()?;
    let mut obj = Map::new();
    obj.insert(
        "counts".to_string(),
        Value::Array(counts.iter().map(|&c| Value::from(c)).collect()),
    );
    obj.insert("freqs".to_string(), Value::Array(freqs));
    Ok(Value::Object(obj))
}

/// Renders the report and routes it to stdout or `--out`.
fn emit(value: &Value, out: Option<&Path>) -> Result<String, Invalid> {
    let mut text = json::to_canonical_string(value)?;
    text.push('\n');
    match out {
        Some(path) => {
            std::fs::write(path, &text)
                .map_err(|e| Invalid(format!("cannot write \"{}\": {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn run_measurement(
    command: &str,
    args: &MeasureArgs,
    element_text: Option<&str>,
    require_qubits: bool,
) -> CmdResult {
    let (state, warning) = load_measure_state(args)?;
    let shape = state.shape();
    if require_qubits && shape.d() != 2 {
        return Err(Invalid(format!(
            "{command} requires a qubit register (d = 2); the state has d = {} \
             (use qudit-parity for higher d)",
            shape.d()
        )));
    }
    let element = element_text.map(PauliGroupElement::parse).transpose()?;
    let records = match &element {
        Some(element) => pauli_distribution(&state, element)?,
        None => parity_distribution(&state)?,
    };
    let mut report = Map::new();
    report.insert("command".to_string(), Value::from(command));
    report.insert("d".to_string(), Value::from(shape.d() as u64));
    report.insert("n".to_string(), Value::from(shape.n_sites() as u64));
    if let Some(element) = &element {
        report.insert("element".to_string(), Value::from(element.to_string()));
    }
    report.insert("seed".to_string(), Value::from(args.seed));
    report.insert("shots".to_string(), Value::from(args.shots));
    let record_values = records
        .iter()
        .map(|r| json::record_value(r, args.emit_post_states))
        .collect::<parity_probe::Result<Vec<_>>>()?;
    report.insert("records".to_string(), Value::Array(record_values));
    report.insert(
        "samples".to_string(),
        samples_value(&records, args.shots, args.seed)?,
    );
    let stdout = emit(&Value::Object(report), args.out.as_deref())?;
    Ok(CliOutcome {
        stdout,
        stderr: warning,
        code: EXIT_OK,
    })
}

fn emit_sequence(seq: &PulseSequence, out: Option<&Path>) -> CmdResult {
    let stdout = emit(&json::sequence_value(seq)?, out)?;
    Ok(CliOutcome::ok(stdout))
}

fn run_compile(args: &CompileArgs) -> CmdResult {
    let lowered = if args.no_verify {
        lower_collective_phase_unverified(args.n)?
    } else {
        lower_collective_phase(args.n).map_err(|e| {
            let mut msg = e.to_string();
            if matches!(e, parity_probe::Error::SupportSizeOutOfRange { .. }) {
                msg.push_str(" (pass --no-verify to emit the sequence anyway)");
            }
            Invalid(msg)
        })?
    };
    emit_sequence(&optimize_sequence(&lowered), args.out.as_deref())
}

fn run_schedule(args: &ScheduleArgs) -> CmdResult {
    let seq = schedule_protocol(args.n, args.probe_label)?;
    emit_sequence(&seq, args.out.as_deref())
}

fn run_verify(args: &VerifyArgs) -> CmdResult {
    let seq = json::sequence_from_json(&load_text(&args.state)?)?;
    if seq.probe {
        return Err(Invalid(
            "verify expects a gate-only sequence; schedules with probe operations \
             have no single target matrix"
                .to_string(),
        ));
    }
    let tolerance = args.tol.unwrap_or(tol::COMPILER_DISTANCE);
    if !tolerance.is_finite() || tolerance < 0.0 {
        return Err(Invalid(format!(
            "--tol must be a finite non-negative number, got {tolerance}"
        )));
    }
    let target = collective_target(seq.n_system)?;
    let report = verify_sequence(&seq, &target)?;
    let passed = report.absolute_distance <= tolerance;
    let mut obj = Map::new();
    obj.insert("command".to_string(), Value::from("verify"));
    obj.insert("n_system".to_string(), Value::from(seq.n_system as u64));
    obj.insert(
        "pulse_count".to_string(),
        Value::from(seq.pulses.len() as u64),
    );
    obj.insert("dim".to_string(), Value::from(report.dim as u64));
    obj.insert(
        "absolute_distance".to_string(),
        json::number(report.absolute_distance)?,
    );
    obj.insert(
        "phase_distance".to_string(),
        json::number(report.phase_distance)?,
    );
    obj.insert(
        "max_pulse_defect".to_string(),
        json::number(report.max_pulse_defect)?,
    );
    obj.insert("tolerance".to_string(), json::number(tolerance)?);
    obj.insert("passed".to_string(), Value::Bool(passed));
    let stdout = emit(&Value::Object(obj), args.out.as_deref())?;
    if passed {
        Ok(CliOutcome::ok(stdout))
    } else {
        Ok(CliOutcome {
            stdout,
            stderr: format!(
                "verification failed: distance {:.3e} exceeds tolerance {tolerance:.3e}\n",
                report.absolute_distance
            ),
            code: EXIT_VERIFY_FAILED,
        })
    }
}

fn run_selftest(args: &SelftestArgs) -> CmdResult {
    let results = selftest::run_all();
    let all_passed = results.iter().all(|r| r.passed);
    let checks: Vec<Value> = results
        .iter()
        .map(|r| {
            let mut obj = Map::new();
            obj.insert("name".to_string(), Value::from(r.name));
            obj.insert("passed".to_string(), Value::Bool(r.passed));
            obj.insert("detail".to_string(), Value::from(r.detail.clone()));
            Value::Object(obj)
        })
        .collect();
    let mut obj = Map::new();
    obj.insert("command".to_string(), Value::from("selftest"));
    obj.insert("passed".to_string(), Value::Bool(all_passed));
    obj.insert("checks".to_string(), Value::Array(checks));
    let stdout = emit(&Value::Object(obj), args.out.as_deref())?;
    if all_passed {
        Ok(CliOutcome::ok(stdout))
    } else {
        let failed: Vec<&str> = results
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.name)
            .collect();
        Ok(CliOutcome {
            stdout,
            stderr: format!("selftest failed: {}\n", failed.join(", ")),
            code: EXIT_VERIFY_FAILED,
        })
    }
}
