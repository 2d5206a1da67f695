use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{joint_dim, StateVector, Tensor, C64, HERMITIAN_TOLERANCE, ONE, ZERO};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Row-major `dim * dim` entries.
    Dense(Vec<C64>),
    Diagonal(Vec<C64>),
}

/// Square complex matrix.
///
/// Diagonal operators keep only their diagonal, so products and exponentials
/// of diagonal factors stay `O(dim)`. The Hermitian flag is computed once at
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    storage: Storage,
    hermitian: bool,
}

impl Operator {
    pub fn dense(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty);
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self::from_storage(dim, Storage::Dense(entries)))
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                entries.push(f(r, c));
            }
        }
        Self::dense(dim, entries)
    }

    pub fn diagonal(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Self::from_storage(
            entries.len(),
            Storage::Diagonal(entries),
        ))
    }

    pub fn real_diagonal(values: &[f64]) -> Result<Self> {
        Self::diagonal(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            storage: Storage::Diagonal(alloc::vec![ONE; dim]),
            hermitian: true,
        }
    }

    fn from_storage(dim: usize, storage: Storage) -> Self {
        let mut op = Self {
            dim,
            storage,
            hermitian: false,
        };
        op.hermitian = op.hermiticity_residual() < HERMITIAN_TOLERANCE;
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.storage, Storage::Diagonal(_))
    }

    /// The diagonal entries when the operator is stored diagonally.
    pub fn diagonal_entries(&self) -> Option<&[C64]> {
        match &self.storage {
            Storage::Diagonal(d) => Some(d),
            Storage::Dense(_) => None,
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[row * self.dim + col],
            Storage::Diagonal(d) => {
                if row == col {
                    d[row]
                } else {
                    ZERO
                }
            }
        }
    }

    /// Row-major dense copy of the entries.
    pub fn to_dense(&self) -> Vec<C64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Diagonal(d) => {
                let mut m = alloc::vec![ZERO; self.dim * self.dim];
                for (i, v) in d.iter().enumerate() {
                    m[i * self.dim + i] = *v;
                }
                m
            }
        }
    }

    /// Converts to diagonal storage when every off-diagonal entry is exactly zero.
    pub fn compacted(self) -> Self {
        match &self.storage {
            Storage::Diagonal(_) => self,
            Storage::Dense(m) => {
                let n = self.dim;
                let off_zero = (0..n).all(|r| (0..n).all(|c| r == c || m[r * n + c] == ZERO));
                if off_zero {
                    let d = (0..n).map(|i| m[i * n + i]).collect();
                    Self {
                        dim: n,
                        storage: Storage::Diagonal(d),
                        hermitian: self.hermitian,
                    }
                } else {
                    self
                }
            }
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        match &self.storage {
            Storage::Diagonal(d) => d.iter().map(|v| v.im.abs() * 2.0).fold(0.0, f64::max),
            Storage::Dense(m) => {
                let n = self.dim;
                let mut worst = 0.0f64;
                for r in 0..n {
                    for c in r..n {
                        worst = worst.max((m[r * n + c] - m[c * n + r].conj()).norm());
                    }
                }
                worst
            }
        }
    }

    pub fn require_hermitian(&self) -> Result<()> {
        if self.hermitian {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                residual: self.hermiticity_residual(),
            })
        }
    }

    /// `M v` on raw amplitudes.
    pub fn apply_raw(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(match &self.storage {
            Storage::Diagonal(d) => d.iter().zip(v).map(|(a, b)| a * b).collect(),
            Storage::Dense(m) => m
                .chunks_exact(self.dim)
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect(),
        })
    }

    /// `M |psi>`; the result is flagged unnormalized.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        StateVector::unnormalized(self.apply_raw(state.amplitudes())?)
    }

    /// `<psi|M|psi> / <psi|psi>`.
    pub fn expectation(&self, state: &StateVector) -> Result<C64> {
        let mv = self.apply_raw(state.amplitudes())?;
        let num: C64 = state
            .amplitudes()
            .iter()
            .zip(&mv)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let den = state.norm().powi(2);
        if den == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(num / den)
    }

    pub fn adjoint(&self) -> Self {
        let storage = match &self.storage {
            Storage::Diagonal(d) => Storage::Diagonal(d.iter().map(|v| v.conj()).collect()),
            Storage::Dense(m) => {
                let n = self.dim;
                let mut t = alloc::vec![ZERO; n * n];
                for r in 0..n {
                    for c in 0..n {
                        t[c * n + r] = m[r * n + c].conj();
                    }
                }
                Storage::Dense(t)
            }
        };
        Self {
            dim: self.dim,
            storage,
            hermitian: self.hermitian,
        }
    }

    pub fn matmul(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other)?;
        let n = self.dim;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Diagonal(a), Storage::Diagonal(b)) => {
                Storage::Diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            (Storage::Diagonal(a), Storage::Dense(b)) => {
                let mut m = b.clone();
                for r in 0..n {
                    for c in 0..n {
                        m[r * n + c] *= a[r];
                    }
                }
                Storage::Dense(m)
            }
            (Storage::Dense(a), Storage::Diagonal(b)) => {
                let mut m = a.clone();
                for r in 0..n {
                    for c in 0..n {
                        m[r * n + c] *= b[c];
                    }
                }
                Storage::Dense(m)
            }
            (Storage::Dense(a), Storage::Dense(b)) => {
                let mut m = alloc::vec![ZERO; n * n];
                for r in 0..n {
                    for k in 0..n {
                        let x = a[r * n + k];
                        if x == ZERO {
                            continue;
                        }
                        let row = &mut m[r * n..(r + 1) * n];
                        for (o, y) in row.iter_mut().zip(&b[k * n..(k + 1) * n]) {
                            *o += x * y;
                        }
                    }
                }
                Storage::Dense(m)
            }
        };
        Ok(Self::from_storage(n, storage))
    }

    fn zip_with(&self, other: &Operator, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        self.check_dim(other)?;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Diagonal(a), Storage::Diagonal(b)) => {
                Storage::Diagonal(a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            }
            _ => {
                let a = self.to_dense();
                let b = other.to_dense();
                Storage::Dense(a.iter().zip(&b).map(|(x, y)| f(*x, *y)).collect())
            }
        };
        Ok(Self::from_storage(self.dim, storage))
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: C64) -> Self {
        let storage = match &self.storage {
            Storage::Diagonal(d) => Storage::Diagonal(d.iter().map(|v| v * c).collect()),
            Storage::Dense(m) => Storage::Dense(m.iter().map(|v| v * c).collect()),
        };
        Self::from_storage(self.dim, storage)
    }

    /// `[self, other] = self*other - other*self`.
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                worst = worst.max((self.entry(r, c) - other.entry(r, c)).norm());
            }
        }
        Ok(worst)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            Storage::Diagonal(d) => d.iter().map(|v| v.norm()).fold(0.0, f64::max),
            Storage::Dense(m) => m.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    fn check_dim(&self, other: &Operator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

impl Tensor for Operator {
    fn tensor_with_limit(&self, other: &Self, limit: usize) -> Result<Self> {
        let dim = joint_dim(self.dim, other.dim, limit)?;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Diagonal(a), Storage::Diagonal(b)) => Storage::Diagonal(
                a.iter()
                    .flat_map(|x| b.iter().map(move |y| x * y))
                    .collect(),
            ),
            _ => {
                let (n, m) = (self.dim, other.dim);
                let mut out = alloc::vec![ZERO; dim * dim];
                for r1 in 0..n {
                    for c1 in 0..n {
                        let x = self.entry(r1, c1);
                        if x == ZERO {
                            continue;
                        }
                        for r2 in 0..m {
                            let row = (r1 * m + r2) * dim + c1 * m;
                            for c2 in 0..m {
                                out[row + c2] = x * other.entry(r2, c2);
                            }
                        }
                    }
                }
                Storage::Dense(out)
            }
        };
        Ok(Self {
            dim,
            storage,
            hermitian: self.hermitian && other.hermitian,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_tensor_identity() {
        let id6 = Operator::identity(2)
            .tensor(&Operator::identity(3))
            .unwrap();
        assert_eq!(id6, Operator::identity(6));
    }

    #[test]
    fn hermitian_flag() {
        let h =
            Operator::dense(2, vec![c(1.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(2.0, 0.0)]).unwrap();
        assert!(h.is_hermitian());
        let nh =
            Operator::dense(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(!nh.is_hermitian());
        assert!(matches!(
            nh.require_hermitian(),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn dense_and_diagonal_products_agree() {
        let d = Operator::real_diagonal(&[1.0, -2.0]).unwrap();
        let m =
            Operator::dense(2, vec![c(0.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)]).unwrap();
        let dd = Operator::dense(2, d.to_dense()).unwrap();
        assert!(
            d.matmul(&m)
                .unwrap()
                .max_abs_diff(&dd.matmul(&m).unwrap())
                .unwrap()
                < 1e-15
        );
        assert!(
            m.matmul(&d)
                .unwrap()
                .max_abs_diff(&m.matmul(&dd).unwrap())
                .unwrap()
                < 1e-15
        );
        let t1 = d.tensor(&m).unwrap();
        let t2 = dd.tensor(&m).unwrap();
        assert!(t1.max_abs_diff(&t2).unwrap() < 1e-15);
    }

    #[test]
    fn compacted_detects_diagonal() {
        let m = Operator::dense(2, vec![c(1.0, 0.0), ZERO, ZERO, c(2.0, 0.0)]).unwrap();
        assert!(m.compacted().is_diagonal());
    }
}
