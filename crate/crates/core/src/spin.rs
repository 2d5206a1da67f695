//! Collective spin-j space in the Dicke basis.
//!
//! Basis convention, fixed crate-wide: index `k` holds `|j, m>` with
//! `m = j - k`, so `m` runs from `+j` down to `-j`. Half-integer `j` is
//! supported everywhere through [`HalfInt`].

use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{Operator, StateVector, C64, ZERO};
use crate::{Error, Result};

/// A half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(value: i32) -> Self {
        HalfInt(2 * value)
    }

    /// Accepts `x` when `2x` is an integer.
    pub fn from_f64(x: f64) -> Option<Self> {
        let twice = 2.0 * x;
        if twice.is_finite()
            && (twice - twice.round()).abs() < 1e-9
            && twice.abs() < i32::MAX as f64
        {
            Some(HalfInt(twice.round() as i32))
        } else {
            None
        }
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl core::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Spin-j multiplet of dimension `2j + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinSpace {
    two_j: u32,
}

impl SpinSpace {
    pub fn new(two_j: u32) -> Result<Self> {
        if two_j == 0 {
            return Err(Error::InvalidParameter {
                name: "two_j",
                reason: "must be positive",
            });
        }
        Ok(Self { two_j })
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn j_half(&self) -> HalfInt {
        HalfInt(self.two_j as i32)
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    pub fn has_integer_j(&self) -> bool {
        self.two_j.is_multiple_of(2)
    }

    /// Fails with [`Error::RequiresIntegerSpin`] for half-integer `j`.
    pub fn require_integer_j(&self) -> Result<()> {
        if self.has_integer_j() {
            Ok(())
        } else {
            Err(Error::RequiresIntegerSpin { two_j: self.two_j })
        }
    }

    pub fn index_of(&self, m: HalfInt) -> Result<usize> {
        let tj = self.two_j as i32;
        if m.0.abs() > tj || (tj - m.0) % 2 != 0 {
            return Err(Error::ProjectionOutOfRange {
                two_m: m.0,
                two_j: self.two_j,
            });
        }
        Ok(((tj - m.0) / 2) as usize)
    }

    pub fn m_at(&self, index: usize) -> HalfInt {
        HalfInt(self.two_j as i32 - 2 * index as i32)
    }

    pub fn m_values(&self) -> impl Iterator<Item = HalfInt> + '_ {
        (0..self.dim()).map(move |k| self.m_at(k))
    }

    /// `|j, m>`.
    pub fn dicke(&self, m: HalfInt) -> Result<StateVector> {
        StateVector::basis(self.dim(), self.index_of(m)?)
    }

    /// Normalized `sum_k c_k |j, m_k>`; repeated `m` values accumulate.
    pub fn superpose(&self, terms: &[(HalfInt, C64)]) -> Result<StateVector> {
        if terms.is_empty() {
            return Err(Error::Empty);
        }
        let mut amps = alloc::vec![ZERO; self.dim()];
        for &(m, c) in terms {
            amps[self.index_of(m)?] += c;
        }
        StateVector::new(amps)
    }

    /// `j(j+1) - m(m+1)` under the square root: the `J+` matrix element.
    fn raising_element(&self, m: HalfInt) -> f64 {
        let j = self.j();
        let m = m.value();
        (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
    }

    pub fn op(&self, kind: ObservableKind) -> CollectiveObservable {
        let n = self.dim();
        let j = self.j();
        let casimir = j * (j + 1.0);
        let matrix = match kind {
            ObservableKind::Jz => diag(self.m_values().map(|m| m.value()).collect()),
            ObservableKind::J2 => diag(alloc::vec![casimir; n]),
            ObservableKind::NonlinearA => diag(
                self.m_values()
                    .map(|m| casimir - m.value() * m.value())
                    .collect(),
            ),
            // J+ |j,m> sits at index k-1 when |j,m> sits at k.
            ObservableKind::Jplus => Operator::from_fn(n, |r, c| {
                if c >= 1 && r == c - 1 {
                    C64::new(self.raising_element(self.m_at(c)), 0.0)
                } else {
                    ZERO
                }
            })
            .expect("dimension is positive"),
            ObservableKind::Jminus => Operator::from_fn(n, |r, c| {
                if r == c + 1 {
                    C64::new(self.raising_element(self.m_at(r)), 0.0)
                } else {
                    ZERO
                }
            })
            .expect("dimension is positive"),
        };
        CollectiveObservable {
            space: *self,
            kind,
            matrix,
        }
    }
}

fn diag(values: Vec<f64>) -> Operator {
    Operator::real_diagonal(&values).expect("dimension is positive")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObservableKind {
    Jz,
    Jplus,
    Jminus,
    J2,
    /// `J^2 - Jz^2`, diagonal with eigenvalue `j(j+1) - m^2`.
    NonlinearA,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveObservable {
    pub space: SpinSpace,
    pub kind: ObservableKind,
    pub matrix: Operator,
}

impl CollectiveObservable {
    pub fn into_matrix(self) -> Operator {
        self.matrix
    }
}

/// `<A^2> - <A>^2` on `state`, clamped at zero.
pub fn variance(op: &Operator, state: &StateVector) -> Result<f64> {
    op.require_hermitian()?;
    let av = op.apply(state)?;
    let norm2 = state.norm().powi(2);
    if norm2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mean = state.inner(&av)?.re / norm2;
    let second = av.norm().powi(2) / norm2;
    Ok((second - mean * mean).max(0.0))
}

/// Real part of `<psi|A|psi>` for Hermitian `A`.
pub fn mean(op: &Operator, state: &StateVector) -> Result<f64> {
    op.require_hermitian()?;
    Ok(op.expectation(state)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(two_j: u32) -> SpinSpace {
        SpinSpace::new(two_j).unwrap()
    }

    #[test]
    fn dicke_examples() {
        let s = space(1).dicke(HalfInt::from_twice(1)).unwrap();
        assert_eq!(s, StateVector::basis(2, 0).unwrap());
        let s = space(2).dicke(HalfInt::from_int(-1)).unwrap();
        assert_eq!(s, StateVector::basis(3, 2).unwrap());
    }

    #[test]
    fn dicke_orthonormal() {
        for two_j in 1..=10 {
            let sp = space(two_j);
            for a in sp.m_values() {
                for b in sp.m_values() {
                    let ov = sp.dicke(a).unwrap().inner(&sp.dicke(b).unwrap()).unwrap();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert_eq!(ov, C64::new(expect, 0.0));
                }
            }
        }
    }

    #[test]
    fn out_of_range_projection() {
        assert!(matches!(
            space(2).dicke(HalfInt::from_int(2)),
            Err(Error::ProjectionOutOfRange { .. })
        ));
        // j = 1 has no m = 1/2.
        assert!(space(2).dicke(HalfInt::from_twice(1)).is_err());
    }

    #[test]
    fn superpositions() {
        let sp = space(4);
        let one = C64::new(1.0, 0.0);
        let ghz = sp
            .superpose(&[(HalfInt::from_int(2), one), (HalfInt::from_int(-2), one)])
            .unwrap();
        let r = 1.0 / 2f64.sqrt();
        let expect = [r, 0.0, 0.0, 0.0, r];
        for (a, e) in ghz.amplitudes().iter().zip(expect) {
            assert!((a - C64::new(e, 0.0)).norm() < 1e-15);
        }
        let nl = sp
            .superpose(&[(HalfInt::ZERO, one), (HalfInt::from_int(-2), one)])
            .unwrap();
        assert!(nl.amplitudes()[2].norm() > 0.7 && nl.amplitudes()[4].norm() > 0.7);
        let single = sp
            .superpose(&[(HalfInt::ZERO, C64::new(0.0, 7.0))])
            .unwrap();
        assert!((single.amplitudes()[2] - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(
            sp.superpose(&[(HalfInt::ZERO, ZERO)]),
            Err(Error::ZeroVector)
        );
    }

    #[test]
    fn nonlinear_eigenvalues() {
        let a = space(6).op(ObservableKind::NonlinearA).matrix;
        let d = a.diagonal_entries().unwrap();
        assert_eq!(d[3].re, 12.0);
        assert_eq!(d[0].re, 3.0);
        assert_eq!(d[6].re, 3.0);
    }

    #[test]
    fn jz_acts_diagonally() {
        for two_j in 1..=10 {
            let sp = space(two_j);
            let jz = sp.op(ObservableKind::Jz).matrix;
            for m in sp.m_values() {
                let v = sp.dicke(m).unwrap();
                let out = jz.apply(&v).unwrap();
                assert!(
                    out.max_abs_diff(&v.scaled(C64::new(m.value(), 0.0)))
                        .unwrap()
                        < 1e-15
                );
            }
        }
    }

    #[test]
    fn ladder_commutator_and_casimir() {
        for two_j in 1..=10 {
            let sp = space(two_j);
            let jp = sp.op(ObservableKind::Jplus).matrix;
            let jm = sp.op(ObservableKind::Jminus).matrix;
            let jz = sp.op(ObservableKind::Jz).matrix;
            let j2 = sp.op(ObservableKind::J2).matrix;
            let comm = jp.commutator(&jm).unwrap();
            assert!(comm.max_abs_diff(&jz.scale(C64::new(2.0, 0.0))).unwrap() < 1e-10);
            assert!(jp.adjoint().max_abs_diff(&jm).unwrap() < 1e-15);
            let rebuilt = jm
                .matmul(&jp)
                .unwrap()
                .add(&jz.matmul(&jz).unwrap())
                .unwrap()
                .add(&jz)
                .unwrap();
            assert!(rebuilt.max_abs_diff(&j2).unwrap() < 1e-10);
        }
    }

    #[test]
    fn variance_on_eigenstate_vanishes() {
        let sp = space(5);
        let a = sp.op(ObservableKind::NonlinearA).matrix;
        for m in sp.m_values() {
            assert_eq!(variance(&a, &sp.dicke(m).unwrap()).unwrap(), 0.0);
        }
    }

    #[test]
    fn variance_identities() {
        let one = C64::new(1.0, 0.0);
        for j in 1..=20i32 {
            let sp = space(2 * j as u32);
            let jf = j as f64;
            let ghz = sp
                .superpose(&[(HalfInt::from_int(j), one), (HalfInt::from_int(-j), one)])
                .unwrap();
            let jz = sp.op(ObservableKind::Jz).matrix;
            assert!((variance(&jz, &ghz).unwrap() - jf * jf).abs() < 1e-9);
            let psi = sp
                .superpose(&[(HalfInt::ZERO, one), (HalfInt::from_int(-j), one)])
                .unwrap();
            let a = sp.op(ObservableKind::NonlinearA).matrix;
            assert!((variance(&a, &psi).unwrap() - jf.powi(4) / 4.0).abs() < 1e-9 * jf.powi(4));
        }
    }

    #[test]
    fn half_int_parsing() {
        assert_eq!(HalfInt::from_f64(-1.5), Some(HalfInt::from_twice(-3)));
        assert_eq!(HalfInt::from_f64(0.3), None);
        assert_eq!(alloc::format!("{}", HalfInt::from_twice(-3)), "-3/2");
    }
}
