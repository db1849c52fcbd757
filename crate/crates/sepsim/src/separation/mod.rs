//! Conclusive transformation of a two-state hypothesis pair: optimal
//! success probabilities in closed form, explicit channel constructions,
//! and the inequality chain behind the LOCC upper bound.
//!
//! Throughout, `μ` denotes the absolute overlap of the two source
//! hypotheses and `μ′ ≤ μ` the overlap of the desired targets.  *Separation*
//! means mapping the pair `{φ, ψ}` onto `{φ′, ψ′}` so that success is
//! heralded and never wrong; cloning (`μ → μⁿ` via extra copies) and
//! unambiguous discrimination (`μ′ = 0`) are special cases.

mod channel;

pub use channel::{
    build_discrimination_channel, build_separation_channel, SeparationChannel, DISCR_FAIL,
    DISCR_ID_PHI, DISCR_ID_PSI, SEP_FAIL, SEP_OK,
};

use thiserror::Error;

use crate::qcore::{self, PureState, QcoreError};
use crate::tol;

#[derive(Debug, Error)]
pub enum SeparationError {
    #[error("overlap {name} = {value} outside [0, 1)")]
    InvalidOverlap { name: &'static str, value: f64 },
    #[error("task is undefined: source states coincide (overlap = {mu})")]
    UndefinedTask { mu: f64 },
    #[error("infeasible separation: target overlap {mu_prime} exceeds source overlap {mu}")]
    Infeasible { mu: f64, mu_prime: f64 },
    #[error("priors ({prior_phi}, {prior_psi}) must lie in [0,1] and sum to 1")]
    InvalidPriors { prior_phi: f64, prior_psi: f64 },
    #[error("copy counts must satisfy 1 <= m < n, got m = {m}, n = {n}")]
    InvalidCopyCounts { m: u32, n: u32 },
    #[error("source states must share a dimension, and so must target states")]
    MismatchedSpaces,
    #[error("branch weight vector invalid: {reason}")]
    InvalidBranchWeights { reason: String },
    #[error(transparent)]
    Core(#[from] QcoreError),
}

pub type SeparationResult<T> = Result<T, SeparationError>;

fn check_overlap(name: &'static str, value: f64) -> SeparationResult<f64> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(SeparationError::InvalidOverlap { name, value });
    }
    Ok(value)
}

fn check_source_overlap(name: &'static str, value: f64) -> SeparationResult<f64> {
    check_overlap(name, value)?;
    if value >= 1.0 - tol::NORM_TOL {
        return Err(SeparationError::UndefinedTask { mu: value });
    }
    Ok(value)
}

fn check_ordering(mu: f64, mu_prime: f64) -> SeparationResult<()> {
    if mu_prime > mu + tol::NORM_TOL {
        return Err(SeparationError::Infeasible { mu, mu_prime });
    }
    Ok(())
}

fn check_priors(prior_phi: f64, prior_psi: f64) -> SeparationResult<()> {
    let in_range = (0.0..=1.0).contains(&prior_phi) && (0.0..=1.0).contains(&prior_psi);
    if !in_range || (prior_phi + prior_psi - 1.0).abs() > tol::NORM_TOL {
        return Err(SeparationError::InvalidPriors {
            prior_phi,
            prior_psi,
        });
    }
    Ok(())
}

fn check_copies(m: u32, n: u32) -> SeparationResult<()> {
    if m < 1 || n <= m {
        return Err(SeparationError::InvalidCopyCounts { m, n });
    }
    Ok(())
}

/// Optimal success probability for separating overlap `μ` down to `μ′`
/// with a single system under unrestricted operations:
/// `η = (1 − μ) / (1 − μ′)`.
pub fn eta_global_separation(mu: f64, mu_prime: f64) -> SeparationResult<f64> {
    check_source_overlap("mu", mu)?;
    check_overlap("mu_prime", mu_prime)?;
    check_ordering(mu, mu_prime)?;
    Ok(((1.0 - mu) / (1.0 - mu_prime)).min(1.0))
}

/// Upper bound on the separation efficiency when the two hypotheses carry
/// priors `(s, t)`: `η ≤ 1 − 2√(st)·(μ − μ′)/(1 − μ′)`.
///
/// At equal priors this reduces to [`eta_global_separation`]; for skewed
/// priors it is only an upper bound, and [`crate::locc::one_round_audit`]
/// probes it adversarially.
pub fn eta_separation_upper_bound(
    prior_phi: f64,
    prior_psi: f64,
    mu: f64,
    mu_prime: f64,
) -> SeparationResult<f64> {
    check_priors(prior_phi, prior_psi)?;
    check_source_overlap("mu", mu)?;
    check_overlap("mu_prime", mu_prime)?;
    check_ordering(mu, mu_prime)?;
    Ok(1.0 - 2.0 * (prior_phi * prior_psi).sqrt() * (mu - mu_prime) / (1.0 - mu_prime))
}

/// Optimal efficiency for conclusively turning `m` copies of a product
/// pair with per-party overlaps `(μ, ν)` into `n > m` copies:
/// `η = (1 − μᵐνᵐ) / (1 − μⁿνⁿ)`.
pub fn eta_global_cloning(mu: f64, nu: f64, m: u32, n: u32) -> SeparationResult<f64> {
    check_source_overlap("mu", mu)?;
    check_source_overlap("nu", nu)?;
    check_copies(m, n)?;
    let a = (mu * nu).powi(m as i32);
    let b = (mu * nu).powi(n as i32);
    Ok((1.0 - a) / (1.0 - b))
}

/// Optimal unambiguous discrimination efficiency for `m` copies of the
/// product pair: `η = 1 − μᵐνᵐ`, the `n → ∞` limit of cloning.
pub fn eta_discrimination(mu: f64, nu: f64, m: u32) -> SeparationResult<f64> {
    check_source_overlap("mu", mu)?;
    check_source_overlap("nu", nu)?;
    if m < 1 {
        return Err(SeparationError::InvalidCopyCounts { m, n: m + 1 });
    }
    Ok(1.0 - (mu * nu).powi(m as i32))
}

/// Optimal efficiency for separating a two-party product pair with
/// per-party overlaps `(μ, ν)` to targets `(μ′, ν′)` when the parties are
/// restricted to local operations and classical communication:
///
/// `η = 1 − μν + [(1 − μ)(1 − ν) / ((1 − μ′)(1 − ν′))] · μ′ν′`.
pub fn eta_locc_separation(
    mu: f64,
    nu: f64,
    mu_prime: f64,
    nu_prime: f64,
) -> SeparationResult<f64> {
    check_source_overlap("mu", mu)?;
    check_source_overlap("nu", nu)?;
    check_overlap("mu_prime", mu_prime)?;
    check_overlap("nu_prime", nu_prime)?;
    check_ordering(mu, mu_prime)?;
    check_ordering(nu, nu_prime)?;
    let gain = ((1.0 - mu) * (1.0 - nu)) / ((1.0 - mu_prime) * (1.0 - nu_prime));
    Ok(1.0 - mu * nu + gain * mu_prime * nu_prime)
}

/// LOCC cloning efficiency for `m → n` copies, obtained from
/// [`eta_locc_separation`] by substituting the effective overlaps
/// `(μᵐ, νᵐ) → (μⁿ, νⁿ)`.
pub fn eta_locc_cloning(mu: f64, nu: f64, m: u32, n: u32) -> SeparationResult<f64> {
    check_source_overlap("mu", mu)?;
    check_source_overlap("nu", nu)?;
    check_copies(m, n)?;
    eta_locc_separation(
        mu.powi(m as i32),
        nu.powi(m as i32),
        mu.powi(n as i32),
        nu.powi(n as i32),
    )
}

/// Upper bound on any LOCC separation protocol with priors `(s, t)`:
///
/// `η ≤ 1 − 2√(st)·μν + 2√(st)·[(1 − μ)(1 − ν)/((1 − μ′)(1 − ν′))]·μ′ν′`.
///
/// At equal priors the bound coincides with [`eta_locc_separation`] and is
/// therefore tight.
pub fn eta_locc_upper_bound(
    prior_phi: f64,
    prior_psi: f64,
    mu: f64,
    nu: f64,
    mu_prime: f64,
    nu_prime: f64,
) -> SeparationResult<f64> {
    check_priors(prior_phi, prior_psi)?;
    check_source_overlap("mu", mu)?;
    check_source_overlap("nu", nu)?;
    check_overlap("mu_prime", mu_prime)?;
    check_overlap("nu_prime", nu_prime)?;
    check_ordering(mu, mu_prime)?;
    check_ordering(nu, nu_prime)?;
    let weight = 2.0 * (prior_phi * prior_psi).sqrt();
    let gain = ((1.0 - mu) * (1.0 - nu)) / ((1.0 - mu_prime) * (1.0 - nu_prime));
    Ok(1.0 - weight * mu * nu + weight * gain * mu_prime * nu_prime)
}

/// The canonical real pair with prescribed overlap: `(1, 0)` and
/// `(x, √(1 − x²))` in two dimensions.  Any two states with the same
/// absolute overlap are unitarily equivalent to this pair.
pub fn canonical_pair(overlap: f64) -> SeparationResult<(PureState, PureState)> {
    check_overlap("overlap", overlap)?;
    let first = PureState::basis(2, 0).expect("dimension 2 basis state");
    let second = PureState::new(vec![
        num_complex::Complex64::new(overlap, 0.0),
        num_complex::Complex64::new((1.0 - overlap * overlap).sqrt(), 0.0),
    ])?;
    Ok((first, second))
}

/// A single-system separation task: map the hypothesis pair
/// `{φ, ψ}` (overlap `μ`) onto `{φ′, ψ′}` (overlap `μ′ ≤ μ`), with priors
/// `(s, t)` on the hypotheses.
///
/// States are gauge-aligned at construction so both overlaps are real and
/// nonnegative.
#[derive(Debug, Clone)]
pub struct SeparationTask {
    source_phi: PureState,
    source_psi: PureState,
    target_phi: PureState,
    target_psi: PureState,
    prior_phi: f64,
    prior_psi: f64,
    mu: f64,
    mu_prime: f64,
}

impl SeparationTask {
    pub fn new(
        source_phi: PureState,
        source_psi: PureState,
        target_phi: PureState,
        target_psi: PureState,
        prior_phi: f64,
        prior_psi: f64,
    ) -> SeparationResult<Self> {
        check_priors(prior_phi, prior_psi)?;
        if source_phi.dim() != source_psi.dim() || target_phi.dim() != target_psi.dim() {
            return Err(SeparationError::MismatchedSpaces);
        }
        let (source_phi, source_psi) = qcore::gauge_align(&source_phi, &source_psi)?;
        let (target_phi, target_psi) = qcore::gauge_align(&target_phi, &target_psi)?;
        let mu = qcore::overlap(&source_phi, &source_psi)?;
        let mu_prime = qcore::overlap(&target_phi, &target_psi)?;
        check_source_overlap("mu", mu.min(1.0))?;
        check_ordering(mu, mu_prime)?;
        Ok(Self {
            source_phi,
            source_psi,
            target_phi,
            target_psi,
            prior_phi,
            prior_psi,
            mu,
            mu_prime: mu_prime.min(mu),
        })
    }

    /// Equal-prior task on the canonical two-dimensional representatives
    /// with the given overlaps.
    pub fn from_overlaps(mu: f64, mu_prime: f64) -> SeparationResult<Self> {
        check_source_overlap("mu", mu)?;
        check_overlap("mu_prime", mu_prime)?;
        check_ordering(mu, mu_prime)?;
        let (source_phi, source_psi) = canonical_pair(mu)?;
        let (target_phi, target_psi) = canonical_pair(mu_prime)?;
        Self::new(source_phi, source_psi, target_phi, target_psi, 0.5, 0.5)
    }

    pub fn source_phi(&self) -> &PureState {
        &self.source_phi
    }

    pub fn source_psi(&self) -> &PureState {
        &self.source_psi
    }

    pub fn target_phi(&self) -> &PureState {
        &self.target_phi
    }

    pub fn target_psi(&self) -> &PureState {
        &self.target_psi
    }

    pub fn prior_phi(&self) -> f64 {
        self.prior_phi
    }

    pub fn prior_psi(&self) -> f64 {
        self.prior_psi
    }

    /// Source overlap `μ = |⟨φ|ψ⟩|`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Target overlap `μ′ = |⟨φ′|ψ′⟩|`.
    pub fn mu_prime(&self) -> f64 {
        self.mu_prime
    }
}

/// Margins of the inequality chain that proves the LOCC upper bound for a
/// single measurement round with branch weights `(sᵢ, tᵢ)`.
///
/// All margins are nonnegative (within [`tol::CHAIN_TOL`]) for any valid
/// weight configuration; `passed` summarizes that.
#[derive(Debug, Clone)]
pub struct ChainReport {
    /// `Σᵢ √(sᵢ tᵢ)`; at most 1 by Cauchy–Schwarz.
    pub cauchy_sum: f64,
    /// `1 − cauchy_sum`.
    pub cauchy_margin: f64,
    /// `(2√(s s₁ t t₁) − 2√(st) + 1 − s s₁ − t t₁) · μ′`.
    pub aux_lhs: f64,
    /// `1 − s s₁ − t t₁ − Σ_{i≥2} 2√(s sᵢ t tᵢ)`.
    pub aux_rhs: f64,
    /// `aux_rhs − aux_lhs`.
    pub aux_margin: f64,
    /// `aux_rhs` itself: the right-hand side stays nonnegative, which is
    /// the other side of the two-sided control on the `μ′` term.
    pub rhs_floor_margin: f64,
    pub passed: bool,
}

/// Checks the two inequalities that drive the round-by-round induction for
/// the LOCC bound: the Cauchy–Schwarz sum `Σ√(sᵢtᵢ) ≤ 1` and the auxiliary
/// inequality bounding the `μ′` term from both sides.
///
/// `branch_weights[0]` is the distinguished successful branch `(s₁, t₁)`;
/// the remaining entries are the discarded branches.  Each column must sum
/// to 1 (the weights of a complete instrument under either hypothesis).
pub fn check_chain_inequalities(
    prior_phi: f64,
    prior_psi: f64,
    branch_weights: &[(f64, f64)],
    mu_prime: f64,
) -> SeparationResult<ChainReport> {
    check_priors(prior_phi, prior_psi)?;
    check_overlap("mu_prime", mu_prime)?;
    if branch_weights.is_empty() {
        return Err(SeparationError::InvalidBranchWeights {
            reason: "at least one branch is required".into(),
        });
    }
    let mut sum_phi = 0.0;
    let mut sum_psi = 0.0;
    for &(si, ti) in branch_weights {
        if !(0.0..=1.0 + tol::STRUCT_TOL).contains(&si) || !(0.0..=1.0 + tol::STRUCT_TOL).contains(&ti)
        {
            return Err(SeparationError::InvalidBranchWeights {
                reason: format!("branch weight ({si}, {ti}) outside [0, 1]"),
            });
        }
        sum_phi += si;
        sum_psi += ti;
    }
    if (sum_phi - 1.0).abs() > 1e-9 || (sum_psi - 1.0).abs() > 1e-9 {
        return Err(SeparationError::InvalidBranchWeights {
            reason: format!("branch weights sum to ({sum_phi}, {sum_psi}), expected (1, 1)"),
        });
    }

    let s = prior_phi;
    let t = prior_psi;
    let (s1, t1) = branch_weights[0];
    let cauchy_sum: f64 = branch_weights.iter().map(|&(si, ti)| (si * ti).sqrt()).sum();
    let cauchy_margin = 1.0 - cauchy_sum;

    let cross_first = 2.0 * (s * s1 * t * t1).sqrt();
    let coeff = cross_first - 2.0 * (s * t).sqrt() + 1.0 - s * s1 - t * t1;
    let aux_lhs = coeff * mu_prime;
    let tail: f64 = branch_weights[1..]
        .iter()
        .map(|&(si, ti)| 2.0 * (s * si * t * ti).sqrt())
        .sum();
    let aux_rhs = 1.0 - s * s1 - t * t1 - tail;
    let aux_margin = aux_rhs - aux_lhs;
    let rhs_floor_margin = aux_rhs;
    let passed = cauchy_margin >= -tol::CHAIN_TOL
        && aux_margin >= -tol::CHAIN_TOL
        && rhs_floor_margin >= -tol::CHAIN_TOL;

    Ok(ChainReport {
        cauchy_sum,
        cauchy_margin,
        aux_lhs,
        aux_rhs,
        aux_margin,
        rhs_floor_margin,
        passed,
    })
}
