//! Truncated Fock space for the meter mode.
//!
//! The space keeps levels `|0>..|N>`. Truncation is never silent: a coherent
//! state whose Poisson tail beyond `N` exceeds the space's tolerance is
//! rejected with a suggested cutoff. Ladder operators are the plain
//! truncated matrices, so `[a, a^dagger]` equals the identity except for
//! the last diagonal entry, which is `-N`.

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{Operator, StateVector, C64, ZERO};
use crate::{Error, Result};

/// Default Poisson tail tolerance for coherent states.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Extra levels added on top of the coherent-state cutoff when the meter
/// takes part in two-photon exchange.
pub const DYNAMICS_HEADROOM: usize = 8;

/// Weak-meter default amplitude.
pub const DEFAULT_ETA: C64 = C64::new(0.1, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockSpace {
    cutoff: usize,
    tail_tolerance: f64,
}

impl FockSpace {
    pub fn new(cutoff: usize) -> Self {
        Self {
            cutoff,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }

    pub fn with_tail_tolerance(cutoff: usize, tail_tolerance: f64) -> Result<Self> {
        if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
            return Err(Error::InvalidParameter {
                name: "tail_tolerance",
                reason: "must lie in (0, 1)",
            });
        }
        Ok(Self {
            cutoff,
            tail_tolerance,
        })
    }

    /// Smallest space that holds a coherent state of amplitude `eta`.
    pub fn for_coherent(eta: C64) -> Self {
        Self::new(suggested_cutoff(eta.norm_sqr(), DEFAULT_TAIL_TOLERANCE))
    }

    /// Like [`FockSpace::for_coherent`] with headroom for two-photon processes.
    pub fn for_dynamics(eta: C64) -> Self {
        Self::new(suggested_cutoff(eta.norm_sqr(), DEFAULT_TAIL_TOLERANCE) + DYNAMICS_HEADROOM)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    pub fn fock(&self, n: usize) -> Result<StateVector> {
        StateVector::basis(self.dim(), n)
    }

    /// `|eta>` truncated to the space and renormalized.
    pub fn coherent_state(&self, eta: C64) -> Result<StateVector> {
        let mean = eta.norm_sqr();
        let tail = poisson_tail(mean, self.cutoff);
        if tail > self.tail_tolerance {
            return Err(Error::CutoffTooSmall {
                cutoff: self.cutoff,
                tail,
                suggested: suggested_cutoff(mean, self.tail_tolerance),
            });
        }
        let mut amps = alloc::vec![ZERO; self.dim()];
        let mut term = C64::new((-mean / 2.0).exp(), 0.0);
        for (n, a) in amps.iter_mut().enumerate() {
            if n > 0 {
                term = term * eta / (n as f64).sqrt();
            }
            *a = term;
        }
        StateVector::new(amps)
    }

    pub fn number(&self) -> Operator {
        let values: alloc::vec::Vec<f64> = (0..self.dim()).map(|n| n as f64).collect();
        Operator::real_diagonal(&values).expect("dimension is positive")
    }

    /// `a |n> = sqrt(n) |n-1>`.
    pub fn annihilate(&self) -> Operator {
        Operator::from_fn(self.dim(), |r, c| {
            if c == r + 1 {
                C64::new((c as f64).sqrt(), 0.0)
            } else {
                ZERO
            }
        })
        .expect("dimension is positive")
    }

    pub fn create(&self) -> Operator {
        self.annihilate().adjoint()
    }

    /// Position-like quadrature `(a + a^dagger) / sqrt(2)`.
    pub fn quadrature_x(&self) -> Operator {
        let a = self.annihilate();
        a.add(&a.adjoint())
            .expect("same space")
            .scale(C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0))
    }
}

/// Poisson weight beyond level `cutoff`, summed directly from the tail.
pub fn poisson_tail(mean: f64, cutoff: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    // log p_n = -mean + n ln(mean) - ln n!
    let mut log_p = -mean;
    for n in 1..=(cutoff + 1) {
        log_p += mean.ln() - (n as f64).ln();
    }
    let mut total = 0.0;
    let mut n = cutoff + 1;
    loop {
        let p = log_p.exp();
        total += p;
        if (n as f64) > mean && p < total * 1e-17 {
            break;
        }
        n += 1;
        log_p += mean.ln() - (n as f64).ln();
        if n > cutoff + 100_000 {
            break;
        }
    }
    total
}

/// Smallest `N` with Poisson tail beyond `N` at most `tolerance`.
pub fn suggested_cutoff(mean: f64, tolerance: f64) -> usize {
    let mut n = 0;
    while poisson_tail(mean, n) > tolerance {
        n += 1;
    }
    n
}
