//! Numerical tolerances used across the crate.
//!
//! Every comparison against an analytic value goes through one of these
//! constants so that the precision contract of the library is auditable in
//! a single place.  The values are deliberate: structural checks (operator
//! completeness) are allowed more slack than plain vector arithmetic, and
//! branch pruning sits far below anything a test would ever compare.

/// Normalization tolerance for state vectors and prior distributions.
pub const NORM_TOL: f64 = 1e-12;

/// Structural tolerance: instrument completeness (`Σ MᵢᴴMᵢ = I`) and the
/// slack allowed on Kraus operator norms.
pub const STRUCT_TOL: f64 = 1e-10;

/// Two states are considered equal up to a global phase when
/// `1 − |⟨a|b⟩|` does not exceed this threshold.
pub const PHASE_MATCH_TOL: f64 = 1e-9;

/// Accumulated branch weights at or below this value are treated as
/// zero-probability branches and carry no conditional state.
pub const WEIGHT_PRUNE: f64 = 1e-14;

/// Slack used when checking an achieved efficiency against an upper bound.
pub const BOUND_SLACK: f64 = 1e-9;

/// Margin tolerance for the inequality-chain checks backing the
/// LOCC upper bound.
pub const CHAIN_TOL: f64 = 1e-12;
