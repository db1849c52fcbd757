//! Two-party protocols under local operations and classical communication.
//!
//! A protocol is a finite tree: each internal node is a local instrument
//! applied by one party, with one child per outcome (the outcome label is
//! the classical message); each leaf declares success or failure, and a
//! success leaf may additionally declare locally prepared output states.
//!
//! The [`evaluate_exact`] evaluator propagates the pure conditional state
//! pair under each hypothesis through every branch and scores a success
//! leaf only when, under every hypothesis still consistent with that
//! branch, the final states equal the task targets up to a global phase.
//! This makes the efficiency metric conclusive by construction: a protocol
//! cannot earn credit on a branch where the claimed outputs would be wrong
//! for one of the surviving hypotheses.

mod audit;
mod eval;
mod format;
mod pprime;

pub use audit::{build_two_stage_protocol, one_round_audit, OneRoundAuditReport};
pub use eval::{audit_bound, evaluate_exact, simulate_mc, BranchState, EvalReport, LeafReport};
pub use format::{parse_protocol, write_protocol, ProtocolParseError};
pub use pprime::build_protocol_pprime;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::qcore::{Instrument, PureState, QcoreError};
use crate::separation::{SeparationError, SeparationResult, SeparationTask};
use crate::tol;

#[derive(Debug, Error)]
pub enum LoccError {
    #[error(transparent)]
    Separation(#[from] SeparationError),
    #[error(transparent)]
    Core(#[from] QcoreError),
    #[error("protocol structure error at {path}: {detail}")]
    Structural { path: String, detail: String },
    #[error("Monte Carlo simulation requires at least one trial")]
    NoTrials,
    #[error(
        "one-round audit requires one party's separation to be trivial \
         (mu = mu' or nu = nu'), got mu {mu} -> {mu_prime}, nu {nu} -> {nu_prime}"
    )]
    AuditNeedsTrivialParty {
        mu: f64,
        mu_prime: f64,
        nu: f64,
        nu_prime: f64,
    },
}

pub type LoccResult<T> = Result<T, LoccError>;

/// The two communicating parties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn name(&self) -> &'static str {
        match self {
            Party::Alice => "A",
            Party::Bob => "B",
        }
    }
}

/// Outcome declared by a protocol leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Success,
    Failure,
}

/// A node of an LOCC protocol tree.
///
/// Children of an internal node are keyed by the outcome labels of its
/// instrument; the two label sets must coincide exactly.  A success leaf
/// either declares prepared outputs for *both* parties (the branch's
/// classical record lets each party replace its register with a fixed
/// state) or for neither (the conditional post-measurement states are the
/// outputs).
#[derive(Debug, Clone)]
pub enum ProtocolNode {
    Internal {
        party: Party,
        instrument: Instrument,
        children: BTreeMap<String, ProtocolNode>,
    },
    Leaf {
        verdict: Verdict,
        output_alice: Option<PureState>,
        output_bob: Option<PureState>,
    },
}

impl ProtocolNode {
    pub fn failure() -> Self {
        ProtocolNode::Leaf {
            verdict: Verdict::Failure,
            output_alice: None,
            output_bob: None,
        }
    }

    pub fn success() -> Self {
        ProtocolNode::Leaf {
            verdict: Verdict::Success,
            output_alice: None,
            output_bob: None,
        }
    }

    pub fn success_with_outputs(alice: PureState, bob: PureState) -> Self {
        ProtocolNode::Leaf {
            verdict: Verdict::Success,
            output_alice: Some(alice),
            output_bob: Some(bob),
        }
    }

    /// Number of communication rounds on the deepest path, counting a
    /// maximal run of consecutive nodes by the same party as one round.
    pub fn max_rounds(&self) -> usize {
        fn walk(node: &ProtocolNode, prev: Option<Party>, rounds: usize) -> usize {
            match node {
                ProtocolNode::Leaf { .. } => rounds,
                ProtocolNode::Internal {
                    party, children, ..
                } => {
                    let rounds = rounds + usize::from(prev != Some(*party));
                    children
                        .values()
                        .map(|child| walk(child, Some(*party), rounds))
                        .max()
                        .unwrap_or(rounds)
                }
            }
        }
        walk(self, None, 0)
    }
}

/// A two-party separation task: each hypothesis is a product state across
/// Alice and Bob, and each party has its own target pair.
///
/// Internally this is one [`SeparationTask`] per party plus the shared
/// priors; `μ, μ′` refer to Alice's overlaps and `ν, ν′` to Bob's.
#[derive(Debug, Clone)]
pub struct LoccTask {
    alice: SeparationTask,
    bob: SeparationTask,
}

impl LoccTask {
    /// Assembles a task from per-party source and target pairs.  Both
    /// parties share the hypothesis priors; states are gauge-aligned and
    /// the orderings `μ′ ≤ μ < 1`, `ν′ ≤ ν < 1` are enforced.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        phi_alice: PureState,
        psi_alice: PureState,
        target_phi_alice: PureState,
        target_psi_alice: PureState,
        phi_bob: PureState,
        psi_bob: PureState,
        target_phi_bob: PureState,
        target_psi_bob: PureState,
        prior_phi: f64,
        prior_psi: f64,
    ) -> SeparationResult<Self> {
        let alice = SeparationTask::new(
            phi_alice,
            psi_alice,
            target_phi_alice,
            target_psi_alice,
            prior_phi,
            prior_psi,
        )?;
        let bob = SeparationTask::new(
            phi_bob,
            psi_bob,
            target_phi_bob,
            target_psi_bob,
            prior_phi,
            prior_psi,
        )?;
        Ok(Self { alice, bob })
    }

    /// Equal-prior task on canonical two-dimensional representatives with
    /// the given per-party overlaps.
    pub fn from_overlaps(mu: f64, nu: f64, mu_prime: f64, nu_prime: f64) -> SeparationResult<Self> {
        Self::from_overlaps_with_priors(mu, nu, mu_prime, nu_prime, 0.5, 0.5)
    }

    /// Canonical-representative task with explicit priors.
    pub fn from_overlaps_with_priors(
        mu: f64,
        nu: f64,
        mu_prime: f64,
        nu_prime: f64,
        prior_phi: f64,
        prior_psi: f64,
    ) -> SeparationResult<Self> {
        use crate::separation::canonical_pair;
        let (phi_a, psi_a) = canonical_pair(mu)?;
        let (tphi_a, tpsi_a) = canonical_pair(mu_prime)?;
        let (phi_b, psi_b) = canonical_pair(nu)?;
        let (tphi_b, tpsi_b) = canonical_pair(nu_prime)?;
        Self::new(
            phi_a, psi_a, tphi_a, tpsi_a, phi_b, psi_b, tphi_b, tpsi_b, prior_phi, prior_psi,
        )
    }

    /// Alice's single-system separation task.
    pub fn alice_task(&self) -> &SeparationTask {
        &self.alice
    }

    /// Bob's single-system separation task.
    pub fn bob_task(&self) -> &SeparationTask {
        &self.bob
    }

    pub fn prior_phi(&self) -> f64 {
        self.alice.prior_phi()
    }

    pub fn prior_psi(&self) -> f64 {
        self.alice.prior_psi()
    }

    /// Alice's source overlap `μ`.
    pub fn mu(&self) -> f64 {
        self.alice.mu()
    }

    /// Bob's source overlap `ν`.
    pub fn nu(&self) -> f64 {
        self.bob.mu()
    }

    /// Alice's target overlap `μ′`.
    pub fn mu_prime(&self) -> f64 {
        self.alice.mu_prime()
    }

    /// Bob's target overlap `ν′`.
    pub fn nu_prime(&self) -> f64 {
        self.bob.mu_prime()
    }

    pub(crate) fn party_state<'a>(
        &self,
        pair: &'a (PureState, PureState),
        party: Party,
    ) -> &'a PureState {
        match party {
            Party::Alice => &pair.0,
            Party::Bob => &pair.1,
        }
    }

    pub(crate) fn targets_phi(&self) -> (&PureState, &PureState) {
        (self.alice.target_phi(), self.bob.target_phi())
    }

    pub(crate) fn targets_psi(&self) -> (&PureState, &PureState) {
        (self.alice.target_psi(), self.bob.target_psi())
    }

    /// Checks the trivial-party precondition used by one-round audits.
    pub(crate) fn trivial_party(&self) -> Option<Party> {
        if (self.nu() - self.nu_prime()).abs() <= tol::NORM_TOL {
            Some(Party::Bob)
        } else if (self.mu() - self.mu_prime()).abs() <= tol::NORM_TOL {
            Some(Party::Alice)
        } else {
            None
        }
    }
}
