//! Dense complex linear algebra.
//!
//! Two value types: [`StateVector`] (a normalized amplitude vector unless
//! built through [`StateVector::unnormalized`]) and [`Operator`] (a square
//! matrix, stored densely or as a diagonal). Both are immutable once built.
//! Global phases are never changed silently: [`project`] hands the overlap
//! back to the caller.

mod eig;
mod operator;
mod state;

pub use eig::{eig_hermitian, exp_scaled, expm_i, expm_i_product, EigenDecomposition};
pub use operator::Operator;
pub use state::StateVector;

use crate::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Largest joint dimension [`Tensor::tensor`] will build.
pub const DEFAULT_MAX_JOINT_DIM: usize = 1 << 22;

/// Tolerance on `| ||psi|| - 1 |` for states claiming to be normalized.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Entrywise tolerance on `M - M^dagger` for the Hermitian flag.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Probabilities below this are treated as a failed postselection.
pub const NULL_PROBABILITY: f64 = 1e-300;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Kronecker product, left operand most significant.
pub trait Tensor: Sized {
    fn tensor_with_limit(&self, other: &Self, limit: usize) -> Result<Self>;

    fn tensor(&self, other: &Self) -> Result<Self> {
        self.tensor_with_limit(other, DEFAULT_MAX_JOINT_DIM)
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

pub(crate) fn joint_dim(a: usize, b: usize, limit: usize) -> Result<usize> {
    match a.checked_mul(b) {
        Some(dim) if dim <= limit => Ok(dim),
        Some(dim) => Err(Error::DimensionOverflow { dim, limit }),
        None => Err(Error::DimensionOverflow {
            dim: usize::MAX,
            limit,
        }),
    }
}

/// Outcome of projecting a state onto a direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `|<direction|state>|^2`.
    pub probability: f64,
    /// `<direction|state>`, carrying the phase the collapsed state would have.
    pub overlap: C64,
    /// The direction itself; multiply by `overlap / |overlap|` to recover the
    /// phase-faithful post-measurement state.
    pub collapsed: StateVector,
}

/// Projects `state` onto the normalized `direction`.
pub fn project(state: &StateVector, direction: &StateVector) -> Result<Projection> {
    if !direction.is_normalized() {
        return Err(Error::NotNormalized {
            norm: direction.norm(),
        });
    }
    let overlap = direction.inner(state)?;
    let probability = overlap.norm_sqr();
    if probability < NULL_PROBABILITY {
        return Err(Error::NullPostselection { overlap });
    }
    Ok(Projection {
        probability,
        overlap,
        collapsed: direction.clone(),
    })
}

/// Result of projecting the first factor of a bipartite state.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialProjection {
    pub probability: f64,
    /// Normalized state of the second factor.
    pub conditional: StateVector,
}

/// Projects the first factor of `joint` (dims `direction.dim() x rest`) onto
/// `direction` and returns the renormalized remainder.
pub fn project_first(joint: &StateVector, direction: &StateVector) -> Result<PartialProjection> {
    let raw = contract_first(joint.amplitudes(), direction)?;
    let probability: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
    if probability < NULL_PROBABILITY {
        let overlap = raw.iter().fold(ZERO, |acc, c| acc + c);
        return Err(Error::NullPostselection { overlap });
    }
    Ok(PartialProjection {
        probability,
        conditional: StateVector::new(raw)?,
    })
}

/// `(<direction| (x) I) joint`, unnormalized.
pub(crate) fn contract_first(
    joint: &[C64],
    direction: &StateVector,
) -> Result<alloc::vec::Vec<C64>> {
    let d = direction.dim();
    if !joint.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: joint.len(),
        });
    }
    let rest = joint.len() / d;
    let mut out = alloc::vec![ZERO; rest];
    for (k, f) in direction.amplitudes().iter().enumerate() {
        let fc = f.conj();
        if fc == ZERO {
            continue;
        }
        let block = &joint[k * rest..(k + 1) * rest];
        for (o, a) in out.iter_mut().zip(block) {
            *o += fc * a;
        }
    }
    Ok(out)
}
