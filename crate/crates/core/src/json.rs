//! Canonical JSON encoding for states, measurement records, and pulse
//! sequences.
//!
//! Output is byte-deterministic: objects serialize with sorted keys and
//! every floating-point number is written with 17 significant digits in
//! scientific notation, enough to reconstruct the exact bit pattern on
//! parse. Encoding the same data twice yields identical bytes, and a
//! decode/encode round trip is lossless.

use std::io;

use num_complex::Complex64;
use serde_json::ser::Formatter;
use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};
use crate::ion::{PulsePrimitive, PulseSequence, Zone};
use crate::protocol::MeasurementRecord;
use crate::register::{QuditState, RegisterShape};

/// Compact JSON formatter that renders every float with 17 significant
/// digits so the decimal text maps back to the identical f64.
struct CanonicalFormatter;

impl Formatter for CanonicalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes a JSON value with sorted object keys and canonical floats.
pub fn to_canonical_string(value: &Value) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFormatter);
    serde::Serialize::serialize(value, &mut ser)
        .map_err(|e| Error::Json(format!("serialization failed: {e}")))?;
    String::from_utf8(buf).map_err(|e| Error::Json(format!("non-utf8 output: {e}")))
}

/// Wraps a float for embedding, rejecting values JSON cannot carry.
pub fn number(x: f64) -> Result<Value> {
    Number::from_f64(x)
        .map(Value::Number)
        .ok_or_else(|| Error::Json(format!("non-finite number {x} has no JSON form")))
}

/// A complex number as a two-element [re, im] array.
pub fn complex_value(z: Complex64) -> Result<Value> {
    Ok(Value::Array(vec![number(z.re)?, number(z.im)?]))
}

fn parse_f64(value: &Value, what: &str) -> Result<f64> {
    value
        .as_f64()
        .ok_or_else(|| Error::Json(format!("{what} must be a number")))
}

fn parse_complex(value: &Value, what: &str) -> Result<Complex64> {
    let pair = value
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::Json(format!("{what} must be a [re, im] pair")))?;
    Ok(Complex64::new(
        parse_f64(&pair[0], what)?,
        parse_f64(&pair[1], what)?,
    ))
}

fn parse_usize(value: &Value, what: &str) -> Result<usize> {
    value
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| Error::Json(format!("{what} must be a non-negative integer")))
}

fn get<'v>(obj: &'v Map<String, Value>, key: &str) -> Result<&'v Value> {
    obj.get(key)
        .ok_or_else(|| Error::Json(format!("missing field \"{key}\"")))
}

fn as_object<'v>(value: &'v Value, what: &str) -> Result<&'v Map<String, Value>> {
    value
        .as_object()
        .ok_or_else(|| Error::Json(format!("{what} must be an object")))
}

/// State schema: `{"d", "n", "probe", "amps": [[re, im], ...]}` with `n`
/// counting every site, probe included when the flag is set.
pub fn state_value(state: &QuditState) -> Result<Value> {
    let shape = state.shape();
    let mut obj = Map::new();
    obj.insert("d".to_string(), Value::from(shape.d() as u64));
    obj.insert("n".to_string(), Value::from(shape.n_sites() as u64));
    obj.insert("probe".to_string(), Value::Bool(shape.has_probe()));
    let amps = state
        .amps()
        .iter()
        .map(|a| complex_value(*a))
        .collect::<Result<Vec<_>>>()?;
    obj.insert("amps".to_string(), Value::Array(amps));
    Ok(Value::Object(obj))
}

pub fn state_to_json(state: &QuditState) -> Result<String> {
    to_canonical_string(&state_value(state)?)
}

/// Splits a state object into its register shape and raw amplitude list
/// without enforcing normalization. Callers that want a validated state use
/// [`state_from_value`]; callers with their own norm policy (such as a
/// front end that renormalizes slightly drifted inputs) start from here.
pub fn state_parts_from_value(value: &Value) -> Result<(RegisterShape, Vec<Complex64>)> {
    let obj = as_object(value, "state")?;
    let d = parse_usize(get(obj, "d")?, "\"d\"")?;
    let n = parse_usize(get(obj, "n")?, "\"n\"")?;
    let probe = get(obj, "probe")?
        .as_bool()
        .ok_or_else(|| Error::Json("\"probe\" must be a boolean".to_string()))?;
    let shape = RegisterShape::new(d, n, probe)?;
    let amps = get(obj, "amps")?
        .as_array()
        .ok_or_else(|| Error::Json("\"amps\" must be an array".to_string()))?
        .iter()
        .map(|v| parse_complex(v, "amplitude"))
        .collect::<Result<Vec<_>>>()?;
    Ok((shape, amps))
}

pub fn state_from_value(value: &Value) -> Result<QuditState> {
    let (shape, amps) = state_parts_from_value(value)?;
    QuditState::from_amplitudes(shape, amps)
}

pub fn state_parts_from_json(text: &str) -> Result<(RegisterShape, Vec<Complex64>)> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Json(format!("parse error: {e}")))?;
    state_parts_from_value(&value)
}

pub fn state_from_json(text: &str) -> Result<QuditState> {
    let (shape, amps) = state_parts_from_json(text)?;
    QuditState::from_amplitudes(shape, amps)
}

/// Record schema: `{"outcome", "eigenvalue": [re, im], "prob",
/// "post": state | null}`. The post-measurement state is optional output;
/// pass `include_post = false` to emit `null` regardless.
pub fn record_value(record: &MeasurementRecord, include_post: bool) -> Result<Value> {
    let mut obj = Map::new();
    obj.insert("outcome".to_string(), Value::from(record.outcome as u64));
    obj.insert("eigenvalue".to_string(), complex_value(record.eigenvalue)?);
    obj.insert("prob".to_string(), number(record.probability)?);
    let post = match (&record.post_state, include_post) {
        (Some(state), true) => state_value(state)?,
        _ => Value::Null,
    };
    obj.insert("post".to_string(), post);
    Ok(Value::Object(obj))
}

pub fn record_from_value(value: &Value) -> Result<MeasurementRecord> {
    let obj = as_object(value, "record")?;
    let outcome = parse_usize(get(obj, "outcome")?, "\"outcome\"")?;
    let eigenvalue = parse_complex(get(obj, "eigenvalue")?, "\"eigenvalue\"")?;
    let probability = parse_f64(get(obj, "prob")?, "\"prob\"")?;
    let post_state = match get(obj, "post")? {
        Value::Null => None,
        v => Some(state_from_value(v)?),
    };
    Ok(MeasurementRecord {
        outcome,
        eigenvalue,
        probability,
        post_state,
    })
}

fn zone_name(zone: Zone) -> &'static str {
    match zone {
        Zone::Storage => "storage",
        Zone::Interaction => "interaction",
    }
}

fn zone_from_name(name: &str) -> Result<Zone> {
    match name {
        "storage" => Ok(Zone::Storage),
        "interaction" => Ok(Zone::Interaction),
        other => Err(Error::Json(format!("unknown zone \"{other}\""))),
    }
}

fn pulse_value(pulse: &PulsePrimitive) -> Result<Value> {
    let mut obj = Map::new();
    match pulse {
        PulsePrimitive::GlobalJx2 { chi } => {
            obj.insert("kind".to_string(), Value::from("global_jx2"));
            obj.insert("chi".to_string(), number(*chi)?);
        }
        PulsePrimitive::GlobalRot { alpha, beta } => {
            obj.insert("kind".to_string(), Value::from("global_rot"));
            obj.insert("alpha".to_string(), number(*alpha)?);
            obj.insert("beta".to_string(), number(*beta)?);
        }
        PulsePrimitive::MoveProbe { zone } => {
            obj.insert("kind".to_string(), Value::from("move_probe"));
            obj.insert("zone".to_string(), Value::from(zone_name(*zone)));
        }
        PulsePrimitive::ProbePrep { label } => {
            obj.insert("kind".to_string(), Value::from("probe_prep"));
            obj.insert("label".to_string(), Value::from(*label as u64));
        }
        PulsePrimitive::ProbeMeasure => {
            obj.insert("kind".to_string(), Value::from("probe_measure"));
        }
    }
    Ok(Value::Object(obj))
}

fn pulse_from_value(value: &Value) -> Result<PulsePrimitive> {
    let obj = as_object(value, "pulse")?;
    let kind = get(obj, "kind")?
        .as_str()
        .ok_or_else(|| Error::Json("pulse \"kind\" must be a string".to_string()))?;
    match kind {
        "global_jx2" => Ok(PulsePrimitive::GlobalJx2 {
            chi: parse_f64(get(obj, "chi")?, "\"chi\"")?,
        }),
        "global_rot" => Ok(PulsePrimitive::GlobalRot {
            alpha: parse_f64(get(obj, "alpha")?, "\"alpha\"")?,
            beta: parse_f64(get(obj, "beta")?, "\"beta\"")?,
        }),
        "move_probe" => {
            let zone = get(obj, "zone")?
                .as_str()
                .ok_or_else(|| Error::Json("\"zone\" must be a string".to_string()))?;
            Ok(PulsePrimitive::MoveProbe {
                zone: zone_from_name(zone)?,
            })
        }
        "probe_prep" => Ok(PulsePrimitive::ProbePrep {
            label: parse_usize(get(obj, "label")?, "\"label\"")?,
        }),
        "probe_measure" => Ok(PulsePrimitive::ProbeMeasure),
        other => Err(Error::Json(format!("unknown pulse kind \"{other}\""))),
    }
}

/// Sequence schema: `{"init_zones", "n_system", "probe", "pulses",
/// "global_phase": [re, im]}`. `init_zones` records where each ion species
/// starts so a schedule is executable without out-of-band context.
pub fn sequence_value(seq: &PulseSequence) -> Result<Value> {
    let mut zones = Map::new();
    zones.insert("system".to_string(), Value::from("interaction"));
    if seq.probe {
        zones.insert("probe".to_string(), Value::from("storage"));
    }
    let mut obj = Map::new();
    obj.insert("init_zones".to_string(), Value::Object(zones));
    obj.insert("n_system".to_string(), Value::from(seq.n_system as u64));
    obj.insert("probe".to_string(), Value::Bool(seq.probe));
    let pulses = seq
        .pulses
        .iter()
        .map(pulse_value)
        .collect::<Result<Vec<_>>>()?;
    obj.insert("pulses".to_string(), Value::Array(pulses));
    obj.insert("global_phase".to_string(), complex_value(seq.global_phase)?);
    Ok(Value::Object(obj))
}

pub fn sequence_to_json(seq: &PulseSequence) -> Result<String> {
    to_canonical_string(&sequence_value(seq)?)
}

pub fn sequence_from_value(value: &Value) -> Result<PulseSequence> {
    let obj = as_object(value, "sequence")?;
    let n_system = parse_usize(get(obj, "n_system")?, "\"n_system\"")?;
    let probe = get(obj, "probe")?
        .as_bool()
        .ok_or_else(|| Error::Json("\"probe\" must be a boolean".to_string()))?;
    let pulses = get(obj, "pulses")?
        .as_array()
        .ok_or_else(|| Error::Json("\"pulses\" must be an array".to_string()))?
        .iter()
        .map(pulse_from_value)
        .collect::<Result<Vec<_>>>()?;
    let global_phase = parse_complex(get(obj, "global_phase")?, "\"global_phase\"")?;
    Ok(PulseSequence {
        n_system,
        probe,
        pulses,
        global_phase,
    })
}

pub fn sequence_from_json(text: &str) -> Result<PulseSequence> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Json(format!("parse error: {e}")))?;
    sequence_from_value(&value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ion::{lower_collective_phase, schedule_protocol};
    use crate::protocol::parity_distribution;
    use crate::register::root_of_unity;

    #[test]
    fn float_rendering_round_trips_bit_exactly() {
        let samples = [
            0.0,
            -0.0,
            1.0,
            std::f64::consts::FRAC_1_SQRT_2,
            -std::f64::consts::PI / 3.0,
            1.0e-300,
            -2.2250738585072014e-308,
            f64::MAX,
            5e-324,
        ];
        for &x in &samples {
            let text = to_canonical_string(&number(x).unwrap()).unwrap();
            let back: f64 = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} rendered as {text}");
        }
        assert!(number(f64::NAN).is_err());
        assert!(number(f64::INFINITY).is_err());
    }

    #[test]
    fn state_round_trip_is_lossless_and_deterministic() {
        let shape = RegisterShape::system(3, 2).unwrap();
        let state = QuditState::random(shape, 42);
        let text = state_to_json(&state).unwrap();
        let again = state_to_json(&state_from_json(&text).unwrap()).unwrap();
        assert_eq!(text, again);
        let back = state_from_json(&text).unwrap();
        assert_eq!(back.shape().d(), 3);
        assert_eq!(back.shape().n_sites(), 2);
        assert!(!back.shape().has_probe());
        for (a, b) in back.amps().iter().zip(state.amps()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn malformed_states_are_rejected_with_context() {
        let cases = [
            ("[1, 2]", "must be an object"),
            ("{\"n\": 1, \"probe\": false, \"amps\": []}", "missing field"),
            (
                "{\"d\": 2, \"n\": 1, \"probe\": false, \"amps\": [[1.0]]}",
                "[re, im] pair",
            ),
            ("{\"d\": 2, \"n\": 1, \"probe\": 3, \"amps\": []}", "boolean"),
        ];
        for (text, needle) in cases {
            let err = state_from_json(text).unwrap_err();
            let msg = err.to_string();
            assert!(
                msg.contains(needle),
                "expected \"{needle}\" in \"{msg}\" for {text}"
            );
        }
        // structurally valid JSON carrying physically invalid content
        let unnormalized =
            "{\"d\": 2, \"n\": 1, \"probe\": false, \"amps\": [[1.0, 0.0], [1.0, 0.0]]}";
        assert!(matches!(
            state_from_json(unnormalized),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn record_round_trip_preserves_posts_and_drops_them_on_request() {
        let shape = RegisterShape::system(2, 2).unwrap();
        let state = QuditState::random(shape, 9);
        let records = parity_distribution(&state).unwrap();
        for record in &records {
            let with_post = record_value(record, true).unwrap();
            let back = record_from_value(&with_post).unwrap();
            assert_eq!(back.outcome, record.outcome);
            assert_eq!(
                back.probability.to_bits(),
                record.probability.to_bits()
            );
            assert_eq!(back.post_state.is_some(), record.post_state.is_some());
            let without = record_value(record, false).unwrap();
            assert!(record_from_value(&without).unwrap().post_state.is_none());
        }
    }

    #[test]
    fn sequence_round_trip_preserves_every_pulse() {
        for seq in [
            lower_collective_phase(4).unwrap(),
            schedule_protocol(3, 1).unwrap(),
        ] {
            let text = sequence_to_json(&seq).unwrap();
            let back = sequence_from_json(&text).unwrap();
            assert_eq!(back, seq);
            assert_eq!(sequence_to_json(&back).unwrap(), text);
        }
    }

    #[test]
    fn unknown_pulse_kinds_are_rejected() {
        let text = "{\"init_zones\": {}, \"n_system\": 2, \"probe\": false, \
                    \"pulses\": [{\"kind\": \"warp\"}], \"global_phase\": [1.0, 0.0]}";
        let err = sequence_from_json(text).unwrap_err();
        assert!(err.to_string().contains("unknown pulse kind"));
    }

    #[test]
    fn eigenvalue_rendering_is_exact_at_quarter_turns() {
        let record = MeasurementRecord {
            outcome: 1,
            eigenvalue: root_of_unity(4, 1),
            probability: 0.25,
            post_state: None,
        };
        let value = record_value(&record, true).unwrap();
        let text = to_canonical_string(&value).unwrap();
        let back = record_from_value(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.eigenvalue.re.to_bits(), 0.0f64.to_bits());
        assert_eq!(back.eigenvalue.im.to_bits(), 1.0f64.to_bits());
    }
}
