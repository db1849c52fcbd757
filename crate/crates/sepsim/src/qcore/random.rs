//! Seeded random generators for states and instruments.
//!
//! All sampling is routed through a named stream cipher generator
//! (`ChaCha12`) so that every randomized routine in the crate is a pure
//! function of its seed.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use super::{C64, Instrument, KrausOperator, PureState, QcoreError, QcoreResult};

fn rng_for(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

fn gaussian_complex(rng: &mut ChaCha12Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-distributed pure state of the given dimension, deterministic in the
/// seed.
pub fn random_state(dim: usize, seed: u64) -> QcoreResult<PureState> {
    if dim == 0 {
        return Err(QcoreError::InvalidSamplingShape);
    }
    let mut rng = rng_for(seed);
    loop {
        let v: Vec<C64> = (0..dim).map(|_| gaussian_complex(&mut rng)).collect();
        if let Ok(state) = PureState::normalized(v) {
            return Ok(state);
        }
    }
}

/// Random complete instrument with `outcomes` square Kraus operators on a
/// `dim`-dimensional space, deterministic in the seed.
///
/// A Gaussian `(outcomes·dim) × dim` matrix is orthonormalized column by
/// column; slicing the resulting isometry into row blocks yields operators
/// with `Σ MᵢᴴMᵢ = I` by construction.
pub fn random_instrument(dim: usize, outcomes: usize, seed: u64) -> QcoreResult<Instrument> {
    if dim == 0 || outcomes == 0 {
        return Err(QcoreError::InvalidSamplingShape);
    }
    let mut rng = rng_for(seed);
    let rows = outcomes * dim;
    let isometry = loop {
        let raw = Array2::from_shape_fn((rows, dim), |_| gaussian_complex(&mut rng));
        if let Some(q) = orthonormal_columns(&raw) {
            break q;
        }
    };
    let mut operators = Vec::with_capacity(outcomes);
    for i in 0..outcomes {
        let block = isometry.slice(ndarray::s![i * dim..(i + 1) * dim, ..]).to_owned();
        operators.push(KrausOperator::new(block, format!("m{i}"))?);
    }
    Instrument::new(operators)
}

/// Modified Gram–Schmidt with re-orthogonalization.  Returns `None` if a
/// column turns out to be (numerically) linearly dependent, which for
/// Gaussian input has probability zero.
fn orthonormal_columns(raw: &Array2<C64>) -> Option<Array2<C64>> {
    let (rows, cols) = raw.dim();
    let mut q: Vec<Array1<C64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v = raw.column(j).to_owned();
        for _ in 0..2 {
            for prev in &q {
                let proj: C64 = prev.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                v = v - prev.mapv(|z| z * proj);
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return None;
        }
        q.push(v.mapv(|z| z / norm));
    }
    let mut out = Array2::zeros((rows, cols));
    for (j, col) in q.iter().enumerate() {
        out.column_mut(j).assign(col);
    }
    Some(out)
}
