//! Simulation of ancilla-probe parity measurements on dense qudit registers.
//!
//! The crate provides:
//!
//! - [`register`]: dense state vectors over d-level sites, mixed-radix
//!   indexed with site 0 most significant; the probe, when present, is
//!   site 0.
//! - [`collective`]: pairwise phase-gate networks and their one-pulse
//!   weight-table realization on qubit supports.
//! - [`protocol`]: the probe-based projective parity measurement, its
//!   destructive counting baseline, coherence reporting, and cluster-state
//!   stabilizer checks.
//! - [`pauli`]: staged measurement of arbitrary Pauli-group strings through
//!   the same probe.
//! - [`ion`]: lowering of the collective phase gates onto a two-zone
//!   trapped-ion pulse vocabulary, plus sequence verification.
//! - [`oracle`]: an independent dense brute-force route (Kronecker
//!   operators, spectral projectors, explicit C-NOT counting) that the
//!   interaction-based routes are tested against.
//! - [`json`]: serialization of states, measurement records, and pulse
//!   sequences with deterministic 17-significant-digit floats.
//! - [`selftest`]: the end-to-end verification suite used by both the
//!   integration tests and the CLI.

pub mod collective;
pub mod error;
pub mod ion;
pub mod json;
pub mod oracle;
pub mod pauli;
pub mod protocol;
pub mod register;
pub mod selftest;
pub mod tol;

pub use error::{Error, Result};
pub use register::{Axis, AxisKet, QuditState, RegisterShape};
