use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{joint_dim, Tensor, C64, NORM_TOLERANCE, ZERO};
use crate::{Error, Result};

/// Complex amplitude vector.
///
/// Normalized to `1e-12` unless built with [`StateVector::unnormalized`],
/// which records the fact in [`StateVector::is_normalized`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
    normalized: bool,
}

fn norm_of(amps: &[C64]) -> f64 {
    amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

impl StateVector {
    /// Normalizes `amps`. Fails on empty or zero input.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Empty);
        }
        let norm = norm_of(&amps);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        let amps = amps.into_iter().map(|c| c / norm).collect();
        Ok(Self {
            amps,
            normalized: true,
        })
    }

    /// Accepts `amps` as they are if they already have unit norm.
    pub fn from_normalized(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Empty);
        }
        let norm = norm_of(&amps);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amps,
            normalized: true,
        })
    }

    pub fn unnormalized(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Self {
            amps,
            normalized: false,
        })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        let mut amps = alloc::vec![ZERO; dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self {
            amps,
            normalized: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amps)
    }

    pub fn normalize(&self) -> Result<Self> {
        Self::new(self.amps.clone())
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<a|b>|^2 / (<a|a><b|b>)`, so unnormalized inputs are fine.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        let ov = self.inner(other)?;
        let denom = self.norm().powi(2) * other.norm().powi(2);
        if denom == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok((ov.norm_sqr() / denom).min(1.0))
    }

    /// Multiplies every amplitude by `c`; the result is flagged unnormalized
    /// unless `|c| == 1` on a normalized state.
    pub fn scaled(&self, c: C64) -> Self {
        let normalized = self.normalized && (c.norm() - 1.0).abs() <= NORM_TOLERANCE;
        Self {
            amps: self.amps.iter().map(|a| a * c).collect(),
            normalized,
        }
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

impl Tensor for StateVector {
    fn tensor_with_limit(&self, other: &Self, limit: usize) -> Result<Self> {
        joint_dim(self.dim(), other.dim(), limit)?;
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Ok(Self {
            amps,
            normalized: self.normalized && other.normalized,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn basis_tensor_bookkeeping() {
        let e0 = StateVector::basis(2, 0).unwrap();
        let e1 = StateVector::basis(2, 1).unwrap();
        assert_eq!(e0.tensor(&e1).unwrap(), StateVector::basis(4, 1).unwrap());
    }

    #[test]
    fn rejects_zero_and_unnormalized() {
        assert_eq!(StateVector::new(vec![ZERO, ZERO]), Err(Error::ZeroVector));
        assert!(matches!(
            StateVector::from_normalized(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]),
            Err(Error::NotNormalized { .. })
        ));
        let raw = StateVector::unnormalized(vec![C64::new(2.0, 0.0)]).unwrap();
        assert!(!raw.is_normalized());
        assert!(raw.normalize().unwrap().is_normalized());
    }

    #[test]
    fn inner_is_antilinear_in_bra() {
        let a = StateVector::new(vec![C64::new(0.0, 1.0), ZERO]).unwrap();
        let b = StateVector::basis(2, 0).unwrap();
        assert_eq!(a.inner(&b).unwrap(), C64::new(0.0, -1.0));
    }
}
