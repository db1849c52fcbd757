//! Exact branch-by-branch evaluation, Monte Carlo simulation and bound
//! auditing of protocol trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::qcore::{self, KrausOperator, PureState};
use crate::separation::eta_locc_upper_bound;
use crate::tol;

use super::{LoccError, LoccResult, LoccTask, Party, ProtocolNode, Verdict};

/// The state of one branch of the protocol tree: the accumulated Born
/// weight and the conditional pure states `(Alice part, Bob part)` under
/// each hypothesis.  A hypothesis whose accumulated weight has fallen to
/// the pruning threshold carries no conditional state and is *dead* on
/// this branch — the branch's classical record excludes it.
#[derive(Debug, Clone)]
pub struct BranchState {
    pub path: Vec<String>,
    pub weight_phi: f64,
    pub weight_psi: f64,
    pub cond_phi: Option<(PureState, PureState)>,
    pub cond_psi: Option<(PureState, PureState)>,
}

impl BranchState {
    fn initial(task: &LoccTask) -> Self {
        Self {
            path: Vec::new(),
            weight_phi: 1.0,
            weight_psi: 1.0,
            cond_phi: Some((
                task.alice_task().source_phi().clone(),
                task.bob_task().source_phi().clone(),
            )),
            cond_psi: Some((
                task.alice_task().source_psi().clone(),
                task.bob_task().source_psi().clone(),
            )),
        }
    }

    pub fn live_phi(&self) -> bool {
        self.cond_phi.is_some() && self.weight_phi > tol::WEIGHT_PRUNE
    }

    pub fn live_psi(&self) -> bool {
        self.cond_psi.is_some() && self.weight_psi > tol::WEIGHT_PRUNE
    }

    pub fn path_label(&self) -> String {
        path_label(&self.path)
    }
}

fn path_label(path: &[String]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.join("/")
    }
}

/// Per-leaf record produced by [`evaluate_exact`].
#[derive(Debug, Clone)]
pub struct LeafReport {
    /// Outcome labels from the root, joined with `/` (`"root"` for a
    /// one-leaf tree).
    pub path: String,
    /// The verdict the leaf *claims*.
    pub verdict: Verdict,
    /// Whether the claim withstood the conclusiveness checks; a success
    /// leaf with `scored_success == false` is a flagged cheat.
    pub scored_success: bool,
    /// `s·w_φ + t·w_ψ` if scored successful, else 0.
    pub contribution: f64,
    /// Worst-case overlap of Alice's final state with her target over the
    /// hypotheses still alive on this branch (1 when none are).
    pub fidelity_alice: f64,
    /// Same for Bob.
    pub fidelity_bob: f64,
}

/// Result of exactly evaluating a protocol tree against a task.
#[derive(Debug, Clone)]
pub struct EvalReport {
    /// Total conclusive success probability: the sum of scored leaf
    /// contributions.
    pub efficiency: f64,
    pub per_leaf: Vec<LeafReport>,
    /// Filled by [`audit_bound`].
    pub bound_value: Option<f64>,
    /// Filled by [`audit_bound`]: `efficiency ≤ bound + slack`.
    pub bound_satisfied: Option<bool>,
    /// Communication rounds on the deepest path (same-party runs count
    /// once).
    pub max_rounds: usize,
}

impl EvalReport {
    /// Paths of success leaves that failed the conclusiveness checks.
    pub fn flagged_leaves(&self) -> Vec<&str> {
        self.per_leaf
            .iter()
            .filter(|l| l.verdict == Verdict::Success && !l.scored_success)
            .map(|l| l.path.as_str())
            .collect()
    }
}

pub(crate) struct LeafScore {
    pub scored_success: bool,
    pub contribution: f64,
    pub fidelity_alice: f64,
    pub fidelity_bob: f64,
}

fn ray_overlap(a: &PureState, b: &PureState) -> f64 {
    if a.dim() != b.dim() {
        return 0.0;
    }
    qcore::overlap(a, b).unwrap_or(0.0)
}

/// Scores a leaf against the task targets.
///
/// For every hypothesis still alive on the branch, the party's final state
/// — the declared output if the leaf prepares one, otherwise the
/// conditional post-measurement state — must match that hypothesis's
/// target up to a global phase within [`tol::PHASE_MATCH_TOL`].  Only then
/// does a success leaf contribute `s·w_φ + t·w_ψ`; otherwise it is scored
/// as a failure (and shows up as flagged in the report).
pub(crate) fn score_leaf(
    branch: &BranchState,
    verdict: Verdict,
    output_alice: Option<&PureState>,
    output_bob: Option<&PureState>,
    task: &LoccTask,
) -> LeafScore {
    let mut fidelity_alice = 1.0_f64;
    let mut fidelity_bob = 1.0_f64;
    let mut all_match = true;

    let hypotheses = [
        (branch.live_phi(), &branch.cond_phi, task.targets_phi()),
        (branch.live_psi(), &branch.cond_psi, task.targets_psi()),
    ];
    for (live, cond, (target_a, target_b)) in hypotheses {
        if !live {
            continue;
        }
        let (cond_a, cond_b) = cond.as_ref().expect("live hypothesis carries a state");
        let final_a = output_alice.unwrap_or(cond_a);
        let final_b = output_bob.unwrap_or(cond_b);
        fidelity_alice = fidelity_alice.min(ray_overlap(final_a, target_a));
        fidelity_bob = fidelity_bob.min(ray_overlap(final_b, target_b));
        if !qcore::states_match(final_a, target_a, tol::PHASE_MATCH_TOL)
            || !qcore::states_match(final_b, target_b, tol::PHASE_MATCH_TOL)
        {
            all_match = false;
        }
    }

    match verdict {
        Verdict::Failure => LeafScore {
            scored_success: false,
            contribution: 0.0,
            fidelity_alice,
            fidelity_bob,
        },
        Verdict::Success => {
            let contribution = if all_match {
                task.prior_phi() * branch.weight_phi + task.prior_psi() * branch.weight_psi
            } else {
                0.0
            };
            LeafScore {
                scored_success: all_match,
                contribution,
                fidelity_alice,
                fidelity_bob,
            }
        }
    }
}

fn structural(path: &[String], detail: impl Into<String>) -> LoccError {
    LoccError::Structural {
        path: path_label(path),
        detail: detail.into(),
    }
}

fn step_hypothesis(
    cond: &Option<(PureState, PureState)>,
    weight: f64,
    op: &KrausOperator,
    party: Party,
    path: &[String],
) -> LoccResult<(Option<(PureState, PureState)>, f64)> {
    let Some((alice, bob)) = cond else {
        return Ok((None, 0.0));
    };
    let acted_on = match party {
        Party::Alice => alice,
        Party::Bob => bob,
    };
    if op.input_dim() != acted_on.dim() {
        return Err(structural(
            path,
            format!(
                "operator {:?} expects input dimension {}, but party {} holds dimension {}",
                op.label(),
                op.input_dim(),
                party.name(),
                acted_on.dim()
            ),
        ));
    }
    let outcome = qcore::apply(op, acted_on)?;
    let new_weight = weight * outcome.weight;
    let new_cond = match outcome.state {
        Some(state) if new_weight > tol::WEIGHT_PRUNE => Some(match party {
            Party::Alice => (state, bob.clone()),
            Party::Bob => (alice.clone(), state),
        }),
        _ => None,
    };
    Ok((new_cond, new_weight))
}

pub(crate) struct LeafVisit<'a> {
    pub branch: &'a BranchState,
    pub verdict: Verdict,
    pub output_alice: Option<&'a PureState>,
    pub output_bob: Option<&'a PureState>,
}

/// Depth-first traversal propagating branch states; validates tree
/// structure along the way and invokes the callbacks.
fn walk(
    node: &ProtocolNode,
    branch: BranchState,
    depth: usize,
    on_node: &mut dyn FnMut(usize, &BranchState, bool),
    on_leaf: &mut dyn FnMut(LeafVisit) -> LoccResult<()>,
) -> LoccResult<()> {
    match node {
        ProtocolNode::Leaf {
            verdict,
            output_alice,
            output_bob,
        } => {
            if output_alice.is_some() != output_bob.is_some() {
                return Err(structural(
                    &branch.path,
                    "a success leaf must declare prepared outputs for both parties or neither",
                ));
            }
            on_node(depth, &branch, true);
            on_leaf(LeafVisit {
                branch: &branch,
                verdict: *verdict,
                output_alice: output_alice.as_ref(),
                output_bob: output_bob.as_ref(),
            })
        }
        ProtocolNode::Internal {
            party,
            instrument,
            children,
        } => {
            on_node(depth, &branch, false);
            let mut op_labels: Vec<&str> =
                instrument.operators().iter().map(|o| o.label()).collect();
            op_labels.sort_unstable();
            let child_labels: Vec<&str> = children.keys().map(String::as_str).collect();
            if op_labels != child_labels {
                return Err(structural(
                    &branch.path,
                    format!(
                        "children {:?} do not match instrument outcomes {:?}",
                        child_labels, op_labels
                    ),
                ));
            }
            for op in instrument.operators() {
                let child = &children[op.label()];
                let (cond_phi, weight_phi) = step_hypothesis(
                    &branch.cond_phi,
                    branch.weight_phi,
                    op,
                    *party,
                    &branch.path,
                )?;
                let (cond_psi, weight_psi) = step_hypothesis(
                    &branch.cond_psi,
                    branch.weight_psi,
                    op,
                    *party,
                    &branch.path,
                )?;
                let mut path = branch.path.clone();
                path.push(op.label().to_string());
                walk(
                    child,
                    BranchState {
                        path,
                        weight_phi,
                        weight_psi,
                        cond_phi,
                        cond_psi,
                    },
                    depth + 1,
                    on_node,
                    on_leaf,
                )?;
            }
            Ok(())
        }
    }
}

pub(crate) fn visit_leaves(
    root: &ProtocolNode,
    task: &LoccTask,
    mut on_leaf: impl FnMut(LeafVisit) -> LoccResult<()>,
) -> LoccResult<()> {
    walk(
        root,
        BranchState::initial(task),
        0,
        &mut |_, _, _| {},
        &mut on_leaf,
    )
}

/// Exactly evaluates a protocol tree: propagates the conditional state
/// pair under both hypotheses through every branch, scores each leaf, and
/// sums the scored success contributions.
pub fn evaluate_exact(root: &ProtocolNode, task: &LoccTask) -> LoccResult<EvalReport> {
    let mut per_leaf = Vec::new();
    let mut efficiency = 0.0;
    visit_leaves(root, task, |visit| {
        let score = score_leaf(
            visit.branch,
            visit.verdict,
            visit.output_alice,
            visit.output_bob,
            task,
        );
        efficiency += score.contribution;
        per_leaf.push(LeafReport {
            path: visit.branch.path_label(),
            verdict: visit.verdict,
            scored_success: score.scored_success,
            contribution: score.contribution,
            fidelity_alice: score.fidelity_alice,
            fidelity_bob: score.fidelity_bob,
        });
        Ok(())
    })?;
    Ok(EvalReport {
        efficiency,
        per_leaf,
        bound_value: None,
        bound_satisfied: None,
        max_rounds: root.max_rounds(),
    })
}

/// Per-depth sums of branch weights under each hypothesis.  Entry `d`
/// sums, for either hypothesis, the weights of all branches crossing depth
/// `d` (leaves shallower than `d` keep contributing their final weight).
/// Completeness of every instrument makes each entry 1 up to rounding and
/// pruning losses.
pub fn weight_conservation_by_depth(
    root: &ProtocolNode,
    task: &LoccTask,
) -> LoccResult<Vec<(f64, f64)>> {
    let mut records: Vec<(usize, bool, f64, f64)> = Vec::new();
    walk(
        root,
        BranchState::initial(task),
        0,
        &mut |depth, branch, is_leaf| {
            records.push((depth, is_leaf, branch.weight_phi, branch.weight_psi));
        },
        &mut |_| Ok(()),
    )?;
    let max_depth = records.iter().map(|r| r.0).max().unwrap_or(0);
    let mut sums = vec![(0.0, 0.0); max_depth + 1];
    for (depth, is_leaf, w_phi, w_psi) in records {
        let last = if is_leaf { max_depth } else { depth };
        for entry in sums.iter_mut().take(last + 1).skip(depth) {
            entry.0 += w_phi;
            entry.1 += w_psi;
        }
    }
    Ok(sums)
}

/// Fills in the LOCC upper bound for the task and whether the achieved
/// efficiency respects it (within [`tol::BOUND_SLACK`]).
pub fn audit_bound(mut report: EvalReport, task: &LoccTask) -> EvalReport {
    let bound = eta_locc_upper_bound(
        task.prior_phi(),
        task.prior_psi(),
        task.mu(),
        task.nu(),
        task.mu_prime(),
        task.nu_prime(),
    )
    .expect("task overlaps and priors were validated at construction");
    report.bound_value = Some(bound);
    report.bound_satisfied = Some(report.efficiency <= bound + tol::BOUND_SLACK);
    report
}

/// Monte Carlo simulation of a protocol: samples the hypothesis by its
/// prior and the branch by the Born weights, and counts runs that end on a
/// leaf scored successful by the exact evaluator.  Returns the success
/// frequency and its binomial standard error.
///
/// Trials are processed in blocks of 2¹⁶ with the block `b` generator
/// seeded as `seed + b`, so results are reproducible and independent of
/// any future parallelization of the block loop.
pub fn simulate_mc(
    root: &ProtocolNode,
    task: &LoccTask,
    trials: u64,
    seed: u64,
) -> LoccResult<(f64, f64)> {
    if trials == 0 {
        return Err(LoccError::NoTrials);
    }

    // Leaf distribution under each hypothesis, plus the scored flag.
    let mut weights_phi: Vec<f64> = Vec::new();
    let mut weights_psi: Vec<f64> = Vec::new();
    let mut scored: Vec<bool> = Vec::new();
    visit_leaves(root, task, |visit| {
        let score = score_leaf(
            visit.branch,
            visit.verdict,
            visit.output_alice,
            visit.output_bob,
            task,
        );
        weights_phi.push(visit.branch.weight_phi);
        weights_psi.push(visit.branch.weight_psi);
        scored.push(score.scored_success);
        Ok(())
    })?;
    let cum = |weights: &[f64]| {
        let mut acc = 0.0;
        weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect::<Vec<f64>>()
    };
    let cum_phi = cum(&weights_phi);
    let cum_psi = cum(&weights_psi);
    let total_phi = *cum_phi.last().expect("tree has at least one leaf");
    let total_psi = *cum_psi.last().expect("tree has at least one leaf");

    const BLOCK: u64 = 1 << 16;
    let mut successes: u64 = 0;
    let mut done: u64 = 0;
    let mut block: u64 = 0;
    while done < trials {
        let n = BLOCK.min(trials - done);
        let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(block));
        for _ in 0..n {
            let under_phi = rng.gen::<f64>() < task.prior_phi();
            let (cum, total) = if under_phi {
                (&cum_phi, total_phi)
            } else {
                (&cum_psi, total_psi)
            };
            let u = rng.gen::<f64>() * total;
            let idx = cum.partition_point(|&c| c <= u).min(scored.len() - 1);
            if scored[idx] {
                successes += 1;
            }
        }
        done += n;
        block += 1;
    }

    let frequency = successes as f64 / trials as f64;
    let std_error = (frequency * (1.0 - frequency) / trials as f64).sqrt();
    Ok((frequency, std_error))
}
