//! Explicit Kraus constructions: the optimal two-outcome separation
//! channel, a weighted (generally suboptimal) variant used by audits, and
//! the three-outcome unambiguous discrimination instrument.
//!
//! All constructions live on the two-dimensional span of the hypothesis
//! pair; the orthogonal complement of that span is routed into the failure
//! outcome, since valid inputs are promised to be one of the two
//! hypotheses.  Completeness on the *full* input space therefore holds by
//! construction and is re-verified numerically when the instrument is
//! assembled.

use ndarray::{Array1, Array2};

use crate::qcore::{self, C64, Instrument, KrausOperator, PureState};
use crate::tol;

use super::{SeparationError, SeparationResult, SeparationTask};

/// Outcome label of the successful separation branch.
pub const SEP_OK: &str = "ok";
/// Outcome label of the failed separation branch.
pub const SEP_FAIL: &str = "fail";
/// Discrimination outcome: input identified as the first hypothesis.
pub const DISCR_ID_PHI: &str = "id-phi";
/// Discrimination outcome: input identified as the second hypothesis.
pub const DISCR_ID_PSI: &str = "id-psi";
/// Discrimination outcome: inconclusive.
pub const DISCR_FAIL: &str = "fail";

/// Orthonormal frame adapted to a gauge-aligned hypothesis pair: `e1` is
/// the first state, `e2` completes the span, and `complement` completes the
/// space.  The pair's coordinates in this frame are real.
pub(crate) struct SpanFrame {
    pub e1: Array1<C64>,
    pub e2: Array1<C64>,
    pub complement: Vec<Array1<C64>>,
    /// Overlap of the pair (real, in `[0, 1)` for valid tasks).
    pub mu: f64,
    /// `√(1 − μ²)`, the second coordinate of the second state.
    pub sin: f64,
}

pub(crate) fn span_frame(phi: &PureState, psi: &PureState) -> SeparationResult<SpanFrame> {
    let (phi, psi) = qcore::gauge_align(phi, psi)?;
    let mu = qcore::inner(&phi, &psi)?.re;
    if mu >= 1.0 - tol::NORM_TOL {
        return Err(SeparationError::UndefinedTask { mu });
    }
    let sin = (1.0 - mu * mu).sqrt();
    let e1 = phi.amplitudes().clone();
    let e2 = (psi.amplitudes() - &e1.mapv(|z| z * mu)).mapv(|z| z / sin);

    let d = e1.len();
    let mut basis = vec![e1.clone(), e2.clone()];
    let mut complement = Vec::new();
    for k in 0..d {
        if complement.len() == d - 2 {
            break;
        }
        let mut v: Array1<C64> = Array1::zeros(d);
        v[k] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in &basis {
                let proj: C64 = b.iter().zip(v.iter()).map(|(a, x)| a.conj() * x).sum();
                v = v - b.mapv(|z| z * proj);
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            let unit = v.mapv(|z| z / norm);
            basis.push(unit.clone());
            complement.push(unit);
        }
    }
    Ok(SpanFrame {
        e1,
        e2,
        complement,
        mu,
        sin,
    })
}

/// Rank-one matrix `|col⟩⟨row|` (the row vector enters conjugated).
fn outer(col: &Array1<C64>, row: &Array1<C64>) -> Array2<C64> {
    let mut out = Array2::zeros((col.len(), row.len()));
    for (i, a) in col.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            out[(i, j)] = a * b.conj();
        }
    }
    out
}

/// The optimal conclusive separation channel for a task: a two-outcome
/// instrument whose success operator maps both sources onto their targets
/// with the same weight `(1 − μ)/(1 − μ′)`, and whose failure operator
/// collapses both hypotheses onto one common state.
#[derive(Debug, Clone)]
pub struct SeparationChannel {
    success: KrausOperator,
    failure: KrausOperator,
    success_prob_phi: f64,
    success_prob_psi: f64,
}

impl SeparationChannel {
    pub fn success(&self) -> &KrausOperator {
        &self.success
    }

    pub fn failure(&self) -> &KrausOperator {
        &self.failure
    }

    /// Born-rule success weight on the first source state.
    pub fn success_prob_phi(&self) -> f64 {
        self.success_prob_phi
    }

    /// Born-rule success weight on the second source state; equals
    /// [`Self::success_prob_phi`] up to rounding.
    pub fn success_prob_psi(&self) -> f64 {
        self.success_prob_psi
    }

    /// The channel as a complete two-outcome instrument
    /// (labels [`SEP_OK`], [`SEP_FAIL`]).
    pub fn instrument(&self) -> Instrument {
        Instrument::new(vec![self.success.clone(), self.failure.clone()])
            .expect("separation channel was validated at construction")
    }
}

/// Builds the optimal separation channel for the task.
///
/// The success operator `S` satisfies `S|φ⟩ = √p|φ′⟩` and `S|ψ⟩ = √p|ψ′⟩`
/// with `p = (1 − μ)/(1 − μ′)`; the failure operator sends both sources to
/// a common flag state with weight `1 − p`, which is exactly the weight
/// split that keeps the joint map an isometry on the source span.
pub fn build_separation_channel(task: &SeparationTask) -> SeparationResult<SeparationChannel> {
    let source = span_frame(task.source_phi(), task.source_psi())?;
    let target = span_frame(task.target_phi(), task.target_psi())?;
    let mu = source.mu;
    let mu_prime = target.mu;
    let p = ((1.0 - mu) / (1.0 - mu_prime)).min(1.0);

    let d_in = task.source_phi().dim();
    let sqrt_p = p.sqrt();

    // S·e1 = √p·b1,  S·e2 = √p·[(μ′ − μ)·b1 + sin′·b2] / sin.
    let b1 = &target.e1;
    let b2 = &target.e2;
    let image_e2 = (b1.mapv(|z| z * (mu_prime - mu)) + b2.mapv(|z| z * target.sin))
        .mapv(|z| z * (sqrt_p / source.sin));
    let success_matrix = outer(&b1.mapv(|z| z * sqrt_p), &source.e1) + outer(&image_e2, &source.e2);

    // F·e1 = √(1−p)·f0,  F·e2 = √(1−p)·(1−μ)/sin·f0, complement → f1, f2, …
    let d_fail = 1 + (d_in - 2);
    let sqrt_q = (1.0 - p).max(0.0).sqrt();
    let mut f0: Array1<C64> = Array1::zeros(d_fail);
    f0[0] = C64::new(1.0, 0.0);
    let mut failure_matrix = outer(&f0.mapv(|z| z * sqrt_q), &source.e1)
        + outer(&f0.mapv(|z| z * (sqrt_q * (1.0 - mu) / source.sin)), &source.e2);
    for (k, c) in source.complement.iter().enumerate() {
        let mut fk: Array1<C64> = Array1::zeros(d_fail);
        fk[k + 1] = C64::new(1.0, 0.0);
        failure_matrix = failure_matrix + outer(&fk, c);
    }

    let success = KrausOperator::new(success_matrix, SEP_OK)?;
    let failure = KrausOperator::new(failure_matrix, SEP_FAIL)?;
    // Assembling the instrument re-checks completeness numerically.
    let instrument = Instrument::new(vec![success, failure])?;
    let success = instrument.operators()[0].clone();
    let failure = instrument.operators()[1].clone();

    let success_prob_phi = qcore::apply(&success, task.source_phi())?.weight;
    let success_prob_psi = qcore::apply(&success, task.source_psi())?.weight;
    Ok(SeparationChannel {
        success,
        failure,
        success_prob_phi,
        success_prob_psi,
    })
}

/// Builds a valid conclusive separation instrument whose success operator
/// carries *chosen* per-hypothesis weights: `‖S|φ⟩‖² = w_phi` and
/// `‖S|ψ⟩‖² = w_psi`, still mapping the sources exactly onto the targets.
///
/// Feasibility requires `μ − √(w_phi·w_psi)·μ′ ≤ √((1−w_phi)(1−w_psi))`;
/// the optimal channel sits exactly on that boundary with
/// `w_phi = w_psi = (1−μ)/(1−μ′)`.  Audits sample the interior to probe
/// suboptimal but physical protocols.
pub fn build_weighted_separation_instrument(
    task: &SeparationTask,
    w_phi: f64,
    w_psi: f64,
) -> SeparationResult<Instrument> {
    if !(0.0..=1.0).contains(&w_phi) || !(0.0..=1.0).contains(&w_psi) {
        return Err(SeparationError::InvalidBranchWeights {
            reason: format!("success weights ({w_phi}, {w_psi}) outside [0, 1]"),
        });
    }
    let source = span_frame(task.source_phi(), task.source_psi())?;
    let target = span_frame(task.target_phi(), task.target_psi())?;
    let mu = source.mu;
    let mu_prime = target.mu;

    let gram_residual = mu - (w_phi * w_psi).sqrt() * mu_prime;
    let fail_phi = (1.0 - w_phi).max(0.0).sqrt();
    let fail_psi = (1.0 - w_psi).max(0.0).sqrt();
    let budget = fail_phi * fail_psi;
    if gram_residual > budget + 1e-9 {
        return Err(SeparationError::InvalidBranchWeights {
            reason: format!(
                "success weights ({w_phi}, {w_psi}) infeasible: residual overlap {gram_residual} \
                 exceeds failure budget {budget}"
            ),
        });
    }

    let d_in = task.source_phi().dim();
    // S·e1 = √w_phi·b1,  S·e2 = [(√w_psi·μ′ − √w_phi·μ)·b1 + √w_psi·sin′·b2]/sin.
    let a = w_phi.sqrt();
    let b = w_psi.sqrt();
    let image_e2 = (target.e1.mapv(|z| z * (b * mu_prime - a * mu))
        + target.e2.mapv(|z| z * (b * target.sin)))
    .mapv(|z| z / source.sin);
    let success_matrix =
        outer(&target.e1.mapv(|z| z * a), &source.e1) + outer(&image_e2, &source.e2);

    // Failure images: F|φ⟩ = fail_phi·α, F|ψ⟩ = fail_psi·β with
    // ⟨α|β⟩ = gram_residual / budget, so the joint map preserves the
    // source Gram matrix.
    let d_fail = 2 + (d_in - 2);
    let cos = if budget > 1e-300 {
        (gram_residual / budget).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let sin = (1.0 - cos * cos).max(0.0).sqrt();
    let mut alpha: Array1<C64> = Array1::zeros(d_fail);
    alpha[0] = C64::new(1.0, 0.0);
    let mut beta: Array1<C64> = Array1::zeros(d_fail);
    beta[0] = C64::new(cos, 0.0);
    beta[1] = C64::new(sin, 0.0);
    // F·e1 = fail_phi·α,  F·e2 = (fail_psi·β − μ·fail_phi·α)/sin_source.
    let image_fail_e2 = (beta.mapv(|z| z * fail_psi) - alpha.mapv(|z| z * (mu * fail_phi)))
        .mapv(|z| z / source.sin);
    let mut failure_matrix =
        outer(&alpha.mapv(|z| z * fail_phi), &source.e1) + outer(&image_fail_e2, &source.e2);
    for (k, c) in source.complement.iter().enumerate() {
        let mut fk: Array1<C64> = Array1::zeros(d_fail);
        fk[k + 2] = C64::new(1.0, 0.0);
        failure_matrix = failure_matrix + outer(&fk, c);
    }

    Ok(Instrument::new(vec![
        KrausOperator::new(success_matrix, SEP_OK)?,
        KrausOperator::new(failure_matrix, SEP_FAIL)?,
    ])?)
}

/// Builds the symmetric unambiguous discrimination instrument for a pair
/// of states with overlap `μ`: outcomes [`DISCR_ID_PHI`] and
/// [`DISCR_ID_PSI`] each fire with weight `1 − μ` on their own hypothesis
/// and *never* on the other; [`DISCR_FAIL`] absorbs the rest (weight `μ`
/// on both hypotheses, plus the span complement).
///
/// The identifying operators collapse onto the identified state itself, so
/// the instrument can be applied mid-protocol without losing the register.
pub fn build_discrimination_channel(
    phi: &PureState,
    psi: &PureState,
) -> SeparationResult<Instrument> {
    if phi.dim() != psi.dim() {
        return Err(SeparationError::MismatchedSpaces);
    }
    let frame = span_frame(phi, psi)?;
    let mu = frame.mu;
    let sin = frame.sin;
    let d = phi.dim();

    // States orthogonal (within the span) to each hypothesis.
    let psi_perp = frame.e1.mapv(|z| z * sin) - frame.e2.mapv(|z| z * mu);
    let phi_perp = frame.e2.clone();
    let psi_vec = frame.e1.mapv(|z| z * mu) + frame.e2.mapv(|z| z * sin);
    let amp = 1.0 / (1.0 + mu).sqrt();

    let m_phi = outer(&frame.e1.mapv(|z| z * amp), &psi_perp);
    let m_psi = outer(&psi_vec.mapv(|z| z * amp), &phi_perp);

    // Residual operator on the span: R = μ·[[1, c], [c, c²]] with
    // c = sin/(1+μ), a rank-one matrix whose square root is
    // √(μ/(1+c²))·[[1, c], [c, c²]].
    let c = sin / (1.0 + mu);
    let scale = if mu > 0.0 {
        (mu / (1.0 + c * c)).sqrt()
    } else {
        0.0
    };
    let mut m_fail: Array2<C64> = Array2::zeros((d, d));
    let coeffs = [
        (scale, &frame.e1, &frame.e1),
        (scale * c, &frame.e1, &frame.e2),
        (scale * c, &frame.e2, &frame.e1),
        (scale * c * c, &frame.e2, &frame.e2),
    ];
    for (w, col, row) in coeffs {
        m_fail = m_fail + outer(&col.mapv(|z| z * w), row);
    }
    for ck in &frame.complement {
        m_fail = m_fail + outer(ck, ck);
    }

    Ok(Instrument::new(vec![
        KrausOperator::new(m_phi, DISCR_ID_PHI)?,
        KrausOperator::new(m_psi, DISCR_ID_PSI)?,
        KrausOperator::new(m_fail, DISCR_FAIL)?,
    ])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{apply, overlap, random_state, states_match};
    use crate::separation::eta_global_separation;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn random_task(seed: u64, dim_source: usize, dim_target: usize) -> SeparationTask {
        // Order the two random pairs so the lower-overlap pair is the target.
        let a = random_state(dim_source, seed).unwrap();
        let b = random_state(dim_source, seed.wrapping_add(1)).unwrap();
        let c = random_state(dim_target, seed.wrapping_add(2)).unwrap();
        let d = random_state(dim_target, seed.wrapping_add(3)).unwrap();
        if overlap(&a, &b).unwrap() >= overlap(&c, &d).unwrap() {
            SeparationTask::new(a, b, c, d, 0.5, 0.5).unwrap()
        } else {
            SeparationTask::new(c, d, a, b, 0.5, 0.5).unwrap()
        }
    }

    #[test]
    fn channel_success_weight_matches_formula() {
        let task = SeparationTask::from_overlaps(0.5, 0.25).unwrap();
        let channel = build_separation_channel(&task).unwrap();
        let expected = eta_global_separation(0.5, 0.25).unwrap();
        assert_abs_diff_eq!(channel.success_prob_phi(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(channel.success_prob_psi(), expected, epsilon = 1e-12);
    }

    #[test]
    fn channel_success_outputs_are_the_targets() {
        let task = SeparationTask::from_overlaps(0.7, 0.2).unwrap();
        let channel = build_separation_channel(&task).unwrap();
        let out_phi = apply(channel.success(), task.source_phi()).unwrap();
        let out_psi = apply(channel.success(), task.source_psi()).unwrap();
        assert!(states_match(&out_phi.state.unwrap(), task.target_phi(), 1e-12));
        assert!(states_match(&out_psi.state.unwrap(), task.target_psi(), 1e-12));
    }

    #[test]
    fn channel_failure_collapses_to_a_common_state() {
        let task = SeparationTask::from_overlaps(0.5, 0.25).unwrap();
        let channel = build_separation_channel(&task).unwrap();
        let f_phi = apply(channel.failure(), task.source_phi()).unwrap();
        let f_psi = apply(channel.failure(), task.source_psi()).unwrap();
        assert_abs_diff_eq!(f_phi.weight, 1.0 - 2.0 / 3.0, epsilon = 1e-12);
        assert!(states_match(
            &f_phi.state.unwrap(),
            &f_psi.state.unwrap(),
            1e-12
        ));
    }

    #[test]
    fn channel_is_isometric_on_the_span() {
        for seed in 0..50 {
            let task = random_task(seed * 11 + 1, 2 + (seed as usize % 7), 2 + (seed as usize % 5));
            let channel = build_separation_channel(&task).unwrap();
            // Completeness on the full space is re-validated here.
            assert!(channel.instrument().completeness_deviation() <= tol::STRUCT_TOL);
            // Gram preservation: ⟨Sφ|Sψ⟩ + ⟨Fφ|Fψ⟩ = ⟨φ|ψ⟩.
            let s_phi = channel.success().matrix().dot(task.source_phi().amplitudes());
            let s_psi = channel.success().matrix().dot(task.source_psi().amplitudes());
            let f_phi = channel.failure().matrix().dot(task.source_phi().amplitudes());
            let f_psi = channel.failure().matrix().dot(task.source_psi().amplitudes());
            let gram: C64 = s_phi.iter().zip(s_psi.iter()).map(|(a, b)| a.conj() * b).sum::<C64>()
                + f_phi.iter().zip(f_psi.iter()).map(|(a, b)| a.conj() * b).sum::<C64>();
            let expected = crate::qcore::inner(task.source_phi(), task.source_psi()).unwrap();
            assert!((gram - expected).norm() <= tol::STRUCT_TOL);
        }
    }

    #[test]
    fn degenerate_channel_when_no_separation_needed() {
        let task = SeparationTask::from_overlaps(0.4, 0.4).unwrap();
        let channel = build_separation_channel(&task).unwrap();
        assert_abs_diff_eq!(channel.success_prob_phi(), 1.0, epsilon = 1e-12);
        let f = apply(channel.failure(), task.source_phi()).unwrap();
        assert!(f.weight <= tol::WEIGHT_PRUNE);
    }

    #[test]
    fn weighted_instrument_hits_requested_weights() {
        let task = SeparationTask::from_overlaps(0.6, 0.2).unwrap();
        let inst = build_weighted_separation_instrument(&task, 0.3, 0.4).unwrap();
        let ok = &inst.operators()[0];
        assert_abs_diff_eq!(apply(ok, task.source_phi()).unwrap().weight, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(apply(ok, task.source_psi()).unwrap().weight, 0.4, epsilon = 1e-12);
        let out = apply(ok, task.source_phi()).unwrap().state.unwrap();
        assert!(states_match(&out, task.target_phi(), 1e-12));
    }

    #[test]
    fn weighted_instrument_rejects_infeasible_weights() {
        let task = SeparationTask::from_overlaps(0.6, 0.2).unwrap();
        // Beyond the optimal weight (1-0.6)/(1-0.2) = 0.5 the Gram residual
        // cannot be absorbed by the failure branch.
        assert!(build_weighted_separation_instrument(&task, 0.9, 0.9).is_err());
    }

    #[test]
    fn discrimination_weights() {
        let (phi, psi) = crate::separation::canonical_pair(0.5).unwrap();
        let inst = build_discrimination_channel(&phi, &psi).unwrap();
        let on_phi = inst.outcomes(&phi).unwrap();
        let on_psi = inst.outcomes(&psi).unwrap();
        // Success weight 1 − μ on the own hypothesis, zero cross-weight.
        assert_abs_diff_eq!(on_phi[0].1.weight, 0.5, epsilon = 1e-12);
        assert!(on_psi[0].1.weight <= 1e-12);
        assert_abs_diff_eq!(on_psi[1].1.weight, 0.5, epsilon = 1e-12);
        assert!(on_phi[1].1.weight <= 1e-12);
        assert_abs_diff_eq!(on_phi[2].1.weight, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn discrimination_of_orthogonal_pair_is_projective() {
        let (phi, psi) = crate::separation::canonical_pair(0.0).unwrap();
        let inst = build_discrimination_channel(&phi, &psi).unwrap();
        let on_phi = inst.outcomes(&phi).unwrap();
        assert_abs_diff_eq!(on_phi[0].1.weight, 1.0, epsilon = 1e-12);
        assert!(on_phi[2].1.weight <= 1e-12);
    }

    #[test]
    fn discrimination_identifiers_collapse_onto_the_identified_state() {
        for seed in 0..100 {
            let dim = 2 + (seed as usize % 7);
            let phi = random_state(dim, 1000 + seed).unwrap();
            let psi = random_state(dim, 2000 + seed).unwrap();
            let inst = build_discrimination_channel(&phi, &psi).unwrap();
            assert!(inst.completeness_deviation() <= tol::STRUCT_TOL);
            let mu = overlap(&phi, &psi).unwrap();
            let on_phi = inst.outcomes(&phi).unwrap();
            let on_psi = inst.outcomes(&psi).unwrap();
            assert_abs_diff_eq!(on_phi[0].1.weight, 1.0 - mu, epsilon = 1e-10);
            assert!(on_phi[1].1.weight <= 1e-12, "misidentification weight");
            assert!(on_psi[0].1.weight <= 1e-12, "misidentification weight");
            let id_phi_state = on_phi[0].1.state.clone().unwrap();
            assert!(states_match(&id_phi_state, &phi, 1e-10));
            let id_psi_state = on_psi[1].1.state.clone().unwrap();
            assert!(states_match(&id_psi_state, &psi, 1e-10));
        }
    }

    #[test]
    fn random_tasks_roundtrip_through_the_channel() {
        for seed in 0..200 {
            let dim = 2 + (seed as usize % 7);
            let task = random_task(seed * 31 + 7, dim, dim);
            let channel = build_separation_channel(&task).unwrap();
            let expected = eta_global_separation(task.mu(), task.mu_prime()).unwrap();
            assert_abs_diff_eq!(channel.success_prob_phi(), expected, epsilon = 1e-10);
            assert_abs_diff_eq!(channel.success_prob_psi(), expected, epsilon = 1e-10);
            let out = apply(channel.success(), task.source_psi()).unwrap();
            assert!(states_match(&out.state.unwrap(), task.target_psi(), 1e-9));
        }
    }
}
