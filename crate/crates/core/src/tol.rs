//! Numeric tolerances used across the crate.
//!
//! Every comparison threshold lives here so the hierarchy stays visible:
//! freshly constructed objects are held to tighter bounds than values that
//! have been pushed through long operation chains.

/// Norm deviation allowed when a state is constructed from raw amplitudes.
pub const NORM_CONSTRUCT: f64 = 1e-12;

/// Norm deviation allowed after long gate chains (renormalization is never
/// applied silently; this is a verification bound, not a repair threshold).
pub const NORM_EVOLVED: f64 = 1e-10;

/// Largest norm deviation an externally supplied state may carry and still
/// be accepted by the command-line front end. States inside the slack are
/// renormalized (with a warning); states beyond it are rejected outright.
pub const INPUT_NORM_SLACK: f64 = 1e-6;

/// Max |U†U - I| entry for a matrix to be accepted as unitary.
pub const UNITARITY: f64 = 1e-10;

/// Agreement required between the interaction-based measurement routes and
/// the dense spectral-projector route (probabilities and post-states).
pub const ROUTE_AGREEMENT: f64 = 1e-10;

/// Agreement required between the weight-table form of a collective phase
/// and the expanded pairwise-gate product, including global phase. Both
/// sides evaluate to exact ±1 for qubits, so this bound carries no slack
/// for systematic error.
pub const NETWORK_EXACT: f64 = 1e-12;

/// Global-phase-minimized Frobenius distance allowed between a compiled
/// pulse sequence and its target unitary.
pub const COMPILER_DISTANCE: f64 = 1e-9;

/// Outcomes with probability below this threshold are reported with a null
/// post-state instead of a normalized vector built from noise.
pub const PRUNE_PROBABILITY: f64 = 1e-12;

/// Slack allowed on a probability before clamping into [0, 1].
pub const PROBABILITY_SLACK: f64 = 1e-12;
