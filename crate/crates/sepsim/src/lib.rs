//! Conclusive manipulation of two pure product states: exact efficiencies,
//! explicit channel constructions, and LOCC protocol analysis.
//!
//! Two remote parties share one of two known product states and want to
//! transform it — clone it, identify it, or more generally *separate* the
//! pair (reduce the mutual overlap) — succeeding only with some probability
//! but never erring when they claim success.  This crate provides:
//!
//! * [`qcore`] — dense complex states, Kraus operators and instruments;
//! * [`separation`] — closed-form optimal efficiencies, the two-outcome
//!   separation channel, unambiguous discrimination, and the inequality
//!   chain behind the LOCC upper bound;
//! * [`locc`] — protocol trees for two parties restricted to local
//!   operations and classical communication: an optimal protocol builder,
//!   an exact evaluator, a seeded Monte Carlo simulator, and adversarial
//!   bound audits;
//! * [`sweep`] — deterministic parameter sweeps with CSV output, backing
//!   the `sepsim` command-line tool.

pub mod locc;
pub mod qcore;
pub mod separation;
pub mod sweep;
pub mod tol;

pub use qcore::{ApplyOutcome, Instrument, KrausOperator, PureState};
