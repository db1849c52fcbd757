//! Dense complex primitives for small quantum systems: normalized pure
//! states, Kraus operators, measurement instruments, tensor products,
//! Born-rule application and global-phase gauge fixing.
//!
//! Everything here works on explicit `Complex64` vectors and matrices of
//! modest dimension (a handful of levels per subsystem); no sparsity or
//! density-operator machinery is needed because all protocols in this crate
//! propagate pure conditional states branch by branch.

mod random;

pub use random::{random_instrument, random_state};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use thiserror::Error;

use crate::tol;

/// Shorthand for the complex scalar type used throughout the crate.
pub type C64 = Complex64;

#[derive(Debug, Error)]
pub enum QcoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state vector is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },
    #[error("state vector must have dimension >= 1")]
    EmptyState,
    #[error("basis index {index} out of range for dimension {dim}")]
    BasisIndexOutOfRange { index: usize, dim: usize },
    #[error("cannot normalize a vector with (near-)zero norm")]
    ZeroVector,
    #[error("Kraus operator {label:?} has zero-sized matrix")]
    EmptyOperator { label: String },
    #[error("Kraus operator {label:?} amplifies some input (operator norm = {norm})")]
    OperatorNormExceeded { label: String, norm: f64 },
    #[error("instrument must contain at least one Kraus operator")]
    EmptyInstrument,
    #[error("instrument outcome labels must be distinct (duplicate {label:?})")]
    DuplicateLabel { label: String },
    #[error("instrument operators disagree on input dimension ({first} vs {other})")]
    MixedInputDimension { first: usize, other: usize },
    #[error("instrument is not complete: max |Σ MᴴM − I| entry = {deviation:.3e}")]
    IncompleteInstrument { deviation: f64 },
    #[error("random sampling requires dimension >= 1 and outcomes >= 1")]
    InvalidSamplingShape,
}

pub type QcoreResult<T> = Result<T, QcoreError>;

/// A normalized pure state of a finite-dimensional system.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Array1<C64>,
}

impl PureState {
    /// Wraps an amplitude vector, requiring unit norm within [`tol::NORM_TOL`].
    pub fn new(amps: Vec<C64>) -> QcoreResult<Self> {
        if amps.is_empty() {
            return Err(QcoreError::EmptyState);
        }
        let v = Array1::from(amps);
        let norm = vec_norm(&v);
        if (norm - 1.0).abs() > tol::NORM_TOL {
            return Err(QcoreError::NotNormalized { norm });
        }
        Ok(Self { amps: v })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(amps: Vec<C64>) -> QcoreResult<Self> {
        if amps.is_empty() {
            return Err(QcoreError::EmptyState);
        }
        let mut v = Array1::from(amps);
        let norm = vec_norm(&v);
        if norm < 1e-150 {
            return Err(QcoreError::ZeroVector);
        }
        v.mapv_inplace(|z| z / norm);
        Ok(Self { amps: v })
    }

    /// Convenience constructor from real amplitudes (normalizes).
    pub fn from_real(amps: &[f64]) -> QcoreResult<Self> {
        Self::normalized(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// The computational basis state `|index⟩` of the given dimension.
    pub fn basis(dim: usize, index: usize) -> QcoreResult<Self> {
        if dim == 0 {
            return Err(QcoreError::EmptyState);
        }
        if index >= dim {
            return Err(QcoreError::BasisIndexOutOfRange { index, dim });
        }
        let mut v = Array1::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Ok(Self { amps: v })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amps)
    }

    pub(crate) fn from_array_unchecked(amps: Array1<C64>) -> Self {
        Self { amps }
    }
}

fn vec_norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product `⟨u|v⟩` (conjugate-linear in the first slot).
pub fn inner(u: &PureState, v: &PureState) -> QcoreResult<C64> {
    if u.dim() != v.dim() {
        return Err(QcoreError::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    Ok(u.amps
        .iter()
        .zip(v.amps.iter())
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// Absolute overlap `|⟨u|v⟩|`.
pub fn overlap(u: &PureState, v: &PureState) -> QcoreResult<f64> {
    Ok(inner(u, v)?.norm())
}

/// Kronecker product of two pure states; the joint index is
/// `i * v.dim() + j` for `|i⟩ ⊗ |j⟩`.
pub fn tensor(u: &PureState, v: &PureState) -> PureState {
    let mut out = Array1::zeros(u.dim() * v.dim());
    for (i, a) in u.amps.iter().enumerate() {
        for (j, b) in v.amps.iter().enumerate() {
            out[i * v.dim() + j] = a * b;
        }
    }
    PureState { amps: out }
}

/// Multiplies `b` by a global phase so that `⟨a|b⟩` becomes real and
/// nonnegative; `a` is returned unchanged.  Orthogonal pairs (overlap below
/// machine noise) are returned as-is.
pub fn gauge_align(a: &PureState, b: &PureState) -> QcoreResult<(PureState, PureState)> {
    let ip = inner(a, b)?;
    if ip.norm() < 1e-15 {
        return Ok((a.clone(), b.clone()));
    }
    let phase = ip.conj() / ip.norm();
    let aligned = b.amps.mapv(|z| z * phase);
    Ok((a.clone(), PureState { amps: aligned }))
}

/// True when the two states describe the same ray: equal dimension and
/// `1 − |⟨a|b⟩|` within `tolerance`.
pub fn states_match(a: &PureState, b: &PureState, tolerance: f64) -> bool {
    if a.dim() != b.dim() {
        return false;
    }
    match overlap(a, b) {
        Ok(ov) => 1.0 - ov <= tolerance,
        Err(_) => false,
    }
}

/// Result of applying a single Kraus operator to a state: the Born-rule
/// weight and, unless the branch is numerically dead, the renormalized
/// conditional state.
#[derive(Debug, Clone)]
pub struct ApplyOutcome {
    pub weight: f64,
    pub state: Option<PureState>,
}

/// One operator of a measurement instrument, tagged with its outcome label.
///
/// The matrix maps the input space (columns) into the outcome's output
/// space (rows); input and output dimensions may differ.
#[derive(Debug, Clone)]
pub struct KrausOperator {
    matrix: Array2<C64>,
    label: String,
}

impl KrausOperator {
    /// Validates that the operator never amplifies a state: its operator
    /// norm must not exceed `1 +` [`tol::STRUCT_TOL`].
    pub fn new(matrix: Array2<C64>, label: impl Into<String>) -> QcoreResult<Self> {
        let label = label.into();
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(QcoreError::EmptyOperator { label });
        }
        let norm = operator_norm(&matrix);
        if norm > 1.0 + tol::STRUCT_TOL {
            return Err(QcoreError::OperatorNormExceeded { label, norm });
        }
        Ok(Self { matrix, label })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Applies a Kraus operator to a state.  The weight is `‖K|u⟩‖²`; branches
/// with weight at or below [`tol::WEIGHT_PRUNE`] carry no conditional state.
pub fn apply(k: &KrausOperator, u: &PureState) -> QcoreResult<ApplyOutcome> {
    if k.input_dim() != u.dim() {
        return Err(QcoreError::DimensionMismatch {
            expected: k.input_dim(),
            got: u.dim(),
        });
    }
    let image = k.matrix.dot(&u.amps);
    let weight = image.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if weight <= tol::WEIGHT_PRUNE {
        return Ok(ApplyOutcome {
            weight,
            state: None,
        });
    }
    let norm = weight.sqrt();
    Ok(ApplyOutcome {
        weight,
        state: Some(PureState {
            amps: image.mapv(|z| z / norm),
        }),
    })
}

/// A quantum instrument: a finite set of labelled Kraus operators on a
/// common input space satisfying the completeness relation
/// `Σᵢ MᵢᴴMᵢ = I` within [`tol::STRUCT_TOL`].
#[derive(Debug, Clone)]
pub struct Instrument {
    operators: Vec<KrausOperator>,
}

impl Instrument {
    pub fn new(operators: Vec<KrausOperator>) -> QcoreResult<Self> {
        if operators.is_empty() {
            return Err(QcoreError::EmptyInstrument);
        }
        let d = operators[0].input_dim();
        for op in &operators[1..] {
            if op.input_dim() != d {
                return Err(QcoreError::MixedInputDimension {
                    first: d,
                    other: op.input_dim(),
                });
            }
        }
        for (i, op) in operators.iter().enumerate() {
            if operators[..i].iter().any(|o| o.label == op.label) {
                return Err(QcoreError::DuplicateLabel {
                    label: op.label.clone(),
                });
            }
        }
        let deviation = completeness_deviation(&operators);
        if deviation > tol::STRUCT_TOL {
            return Err(QcoreError::IncompleteInstrument { deviation });
        }
        Ok(Self { operators })
    }

    pub fn operators(&self) -> &[KrausOperator] {
        &self.operators
    }

    pub fn input_dim(&self) -> usize {
        self.operators[0].input_dim()
    }

    pub fn num_outcomes(&self) -> usize {
        self.operators.len()
    }

    /// Largest absolute entry of `Σ MᴴM − I`.
    pub fn completeness_deviation(&self) -> f64 {
        completeness_deviation(&self.operators)
    }

    /// Applies every operator to `u`, returning `(label, outcome)` pairs in
    /// declaration order.  Weights sum to 1 for a complete instrument.
    pub fn outcomes(&self, u: &PureState) -> QcoreResult<Vec<(String, ApplyOutcome)>> {
        self.operators
            .iter()
            .map(|op| Ok((op.label.clone(), apply(op, u)?)))
            .collect()
    }
}

fn completeness_deviation(operators: &[KrausOperator]) -> f64 {
    let d = operators[0].input_dim();
    let mut sum: Array2<C64> = Array2::zeros((d, d));
    for op in operators {
        let adjoint = op.matrix.t().mapv(|z| z.conj());
        sum = sum + adjoint.dot(&op.matrix);
    }
    let mut max_dev: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let expected = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            max_dev = max_dev.max((sum[(i, j)] - expected).norm());
        }
    }
    max_dev
}

/// Spectral norm (largest singular value) via power iteration on `MᴴM`.
///
/// Multiple deterministic start vectors guard against a start that is
/// orthogonal to the dominant eigenspace; matrices here are tiny, so the
/// fixed iteration count is ample.
pub fn operator_norm(m: &Array2<C64>) -> f64 {
    let d = m.ncols();
    let adjoint = m.t().mapv(|z| z.conj());
    let gram = adjoint.dot(m);
    let mut best: f64 = 0.0;
    let mut starts: Vec<Array1<C64>> = vec![Array1::from_elem(d, C64::new(1.0, 0.0))];
    for k in 0..d.min(4) {
        let mut e = Array1::zeros(d);
        e[k] = C64::new(1.0, 0.0);
        starts.push(e);
    }
    for start in starts {
        let mut v = start;
        let mut norm = vec_norm(&v);
        if norm < 1e-300 {
            continue;
        }
        v.mapv_inplace(|z| z / norm);
        let mut lambda = 0.0;
        for _ in 0..200 {
            let w = gram.dot(&v);
            norm = vec_norm(&w);
            if norm < 1e-300 {
                lambda = 0.0;
                break;
            }
            lambda = norm;
            v = w.mapv(|z| z / norm);
        }
        // Rayleigh quotient of the converged vector.
        let gv = gram.dot(&v);
        let rq: C64 = v.iter().zip(gv.iter()).map(|(a, b)| a.conj() * b).sum();
        best = best.max(lambda.max(rq.re));
    }
    best.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn inner_of_basis_with_uniform_superposition() {
        let e0 = PureState::basis(2, 0).unwrap();
        let plus = PureState::from_real(&[1.0, 1.0]).unwrap();
        let ip = inner(&e0, &plus).unwrap();
        assert_relative_eq!(ip.re, std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-14);
        assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_slot() {
        let u = PureState::new(vec![c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let v = PureState::basis(2, 0).unwrap();
        let ip = inner(&u, &v).unwrap();
        // ⟨i·e0 | e0⟩ = conj(i) = -i
        assert_abs_diff_eq!(ip.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ip.im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn inner_rejects_dimension_mismatch() {
        let u = PureState::basis(2, 0).unwrap();
        let v = PureState::basis(3, 0).unwrap();
        assert!(matches!(
            inner(&u, &v),
            Err(QcoreError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn new_rejects_unnormalized_vector() {
        let err = PureState::new(vec![c(0.7, 0.0), c(0.0, 0.0)]).unwrap_err();
        assert!(matches!(err, QcoreError::NotNormalized { .. }));
    }

    #[test]
    fn tensor_of_basis_states() {
        let e0 = PureState::basis(2, 0).unwrap();
        let joint = tensor(&e0, &e0);
        assert_eq!(joint.dim(), 4);
        assert_relative_eq!(joint.amplitudes()[0].re, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn tensor_index_convention() {
        let e1 = PureState::basis(2, 1).unwrap();
        let f2 = PureState::basis(3, 2).unwrap();
        let joint = tensor(&e1, &f2);
        assert_eq!(joint.dim(), 6);
        // |1⟩⊗|2⟩ lands at index 1*3 + 2 = 5.
        assert_relative_eq!(joint.amplitudes()[5].re, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn apply_scaled_identity() {
        let m = Array2::from_diag(&Array1::from(vec![c(0.6, 0.0), c(0.6, 0.0)]));
        let k = KrausOperator::new(m, "damp").unwrap();
        let u = PureState::from_real(&[3.0, 4.0]).unwrap();
        let out = apply(&k, &u).unwrap();
        assert_relative_eq!(out.weight, 0.36, max_relative = 1e-14);
        assert!(states_match(&out.state.unwrap(), &u, 1e-12));
    }

    #[test]
    fn apply_prunes_dead_branch() {
        let m = Array2::from_elem((2, 2), c(0.0, 0.0));
        let k = KrausOperator::new(m, "null").unwrap();
        let u = PureState::basis(2, 0).unwrap();
        let out = apply(&k, &u).unwrap();
        assert_eq!(out.weight, 0.0);
        assert!(out.state.is_none());
    }

    #[test]
    fn kraus_rejects_amplifying_operator() {
        let m = Array2::from_diag(&Array1::from(vec![c(1.3, 0.0), c(0.2, 0.0)]));
        let err = KrausOperator::new(m, "bad").unwrap_err();
        assert!(matches!(err, QcoreError::OperatorNormExceeded { .. }));
    }

    #[test]
    fn operator_norm_handles_dominant_space_orthogonal_to_ones() {
        // Projector onto (1,-1)/√2: the all-ones start vector is annihilated.
        let h = 0.5;
        let m = Array2::from_shape_vec((2, 2), vec![c(h, 0.0), c(-h, 0.0), c(-h, 0.0), c(h, 0.0)])
            .unwrap();
        assert_relative_eq!(operator_norm(&m), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn gauge_align_makes_overlap_real_nonnegative() {
        let a = PureState::basis(2, 0).unwrap();
        let b = PureState::new(vec![c(0.0, 0.5), c((0.75f64).sqrt(), 0.0)]).unwrap();
        let ip_before = inner(&a, &b).unwrap();
        assert_abs_diff_eq!(ip_before.im, 0.5, epsilon = 1e-15);
        let (a2, b2) = gauge_align(&a, &b).unwrap();
        let ip = inner(&a2, &b2).unwrap();
        assert_relative_eq!(ip.re, 0.5, max_relative = 1e-14);
        assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn gauge_align_leaves_orthogonal_pair_unchanged() {
        let a = PureState::basis(2, 0).unwrap();
        let b = PureState::new(vec![c(0.0, 0.0), c(0.0, 1.0)]).unwrap();
        let (_, b2) = gauge_align(&a, &b).unwrap();
        assert_eq!(b2, b);
    }

    #[test]
    fn instrument_rejects_incomplete_family() {
        let m = Array2::from_diag(&Array1::from(vec![c(0.5, 0.0), c(0.5, 0.0)]));
        let k = KrausOperator::new(m, "only").unwrap();
        let err = Instrument::new(vec![k]).unwrap_err();
        assert!(matches!(err, QcoreError::IncompleteInstrument { .. }));
    }

    #[test]
    fn instrument_rejects_duplicate_labels() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = Array2::from_diag(&Array1::from(vec![c(h, 0.0), c(h, 0.0)]));
        let k1 = KrausOperator::new(m.clone(), "m").unwrap();
        let k2 = KrausOperator::new(m, "m").unwrap();
        let err = Instrument::new(vec![k1, k2]).unwrap_err();
        assert!(matches!(err, QcoreError::DuplicateLabel { .. }));
    }

    #[test]
    fn random_state_is_deterministic_in_seed() {
        let a = random_state(5, 123).unwrap();
        let b = random_state(5, 123).unwrap();
        let c = random_state(5, 124).unwrap();
        assert_eq!(a, b);
        assert!(overlap(&a, &c).unwrap() < 1.0 - 1e-6);
        assert_abs_diff_eq!(a.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn random_instrument_is_complete_and_deterministic() {
        let a = random_instrument(3, 4, 9).unwrap();
        let b = random_instrument(3, 4, 9).unwrap();
        assert!(a.completeness_deviation() <= tol::STRUCT_TOL);
        assert_eq!(a.num_outcomes(), 4);
        for (oa, ob) in a.operators().iter().zip(b.operators()) {
            assert_eq!(oa.matrix(), ob.matrix());
        }
    }

    #[test]
    fn instrument_weights_sum_to_one() {
        let inst = random_instrument(4, 3, 7).unwrap();
        let u = random_state(4, 8).unwrap();
        let total: f64 = inst
            .outcomes(&u)
            .unwrap()
            .iter()
            .map(|(_, o)| o.weight)
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = tol::STRUCT_TOL);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        /// ⟨u⊗v | u'⊗v'⟩ = ⟨u|u'⟩ ⟨v|v'⟩ for random pairs.
        #[test]
        fn tensor_overlap_is_multiplicative(
            seed in any::<u64>(),
            da in 2usize..5,
            db in 2usize..5,
        ) {
            let u = random_state(da, seed).unwrap();
            let u2 = random_state(da, seed.wrapping_add(1)).unwrap();
            let v = random_state(db, seed.wrapping_add(2)).unwrap();
            let v2 = random_state(db, seed.wrapping_add(3)).unwrap();
            let lhs = inner(&tensor(&u, &v), &tensor(&u2, &v2)).unwrap();
            let rhs = inner(&u, &u2).unwrap() * inner(&v, &v2).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        /// Aligning an already aligned pair changes nothing beyond rounding.
        #[test]
        fn gauge_align_is_stable_under_repetition(seed in any::<u64>(), d in 2usize..6) {
            let a = random_state(d, seed).unwrap();
            let b = random_state(d, seed.wrapping_add(17)).unwrap();
            let (a1, b1) = gauge_align(&a, &b).unwrap();
            let (a2, b2) = gauge_align(&a1, &b1).unwrap();
            prop_assert_eq!(a1, a2);
            let diff: f64 = b1
                .amplitudes()
                .iter()
                .zip(b2.amplitudes().iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            prop_assert!(diff <= 1e-12);
        }

        /// Born weights over a random complete instrument sum to one.
        #[test]
        fn outcome_weights_are_a_distribution(
            seed in any::<u64>(),
            d in 2usize..6,
            k in 1usize..5,
        ) {
            let inst = random_instrument(d, k, seed).unwrap();
            let u = random_state(d, seed.wrapping_add(99)).unwrap();
            let outcomes = inst.outcomes(&u).unwrap();
            let total: f64 = outcomes.iter().map(|(_, o)| o.weight).sum();
            prop_assert!((total - 1.0).abs() <= crate::tol::STRUCT_TOL);
            for (_, o) in &outcomes {
                prop_assert!(o.weight >= 0.0 && o.weight <= 1.0 + crate::tol::STRUCT_TOL);
            }
        }
    }
}
