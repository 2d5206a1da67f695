//! Weak values, postselection and the amplification strategies.
//!
//! The system-meter interaction is an impulsive kick `exp(-i g A (x) B)`
//! with `g` the pulse area. A [`WeakValueStrategy`] fixes the initial and
//! postselected system states, the observables and the meter state;
//! [`postselect`] runs the exact kick-and-project and the first-order
//! weak-value kick side by side.
//!
//! Weak values are taken literally as `<psi_f|A|psi_i> / <psi_f|psi_i>`.
//! For the qubit preset this gives `A_w = -i cot(theta)`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::boson::{FockSpace, DEFAULT_ETA};
use crate::linalg::{
    contract_first, exp_scaled, expm_i_product, Operator, StateVector, Tensor, C64,
    NULL_PROBABILITY, ONE, ZERO,
};
use crate::spin::{variance, HalfInt, ObservableKind, SpinSpace};
use crate::{Error, Result};

/// Default kick strength used by the presets.
pub const DEFAULT_COUPLING: f64 = 1e-4;

/// Overlaps below this (relative to the state norms) leave the weak value undefined.
pub const ORTHOGONALITY_THRESHOLD: f64 = 1e-14;

/// Largest `kappa * j^2` the joint strategy accepts.
pub const MAX_KAPPA_J2: f64 = 0.1;

/// `<psi_f|A|psi_i> / <psi_f|psi_i>`.
///
/// Invariant under global phases and rescaling of either state.
pub fn weak_value(psi_i: &StateVector, psi_f: &StateVector, a: &Operator) -> Result<C64> {
    let overlap = psi_f.inner(psi_i)?;
    if overlap.norm() <= ORTHOGONALITY_THRESHOLD * psi_i.norm() * psi_f.norm() {
        return Err(Error::UndefinedWeakValue { overlap });
    }
    let num = psi_f.inner(&a.apply(psi_i)?)?;
    Ok(num / overlap)
}

/// `|<psi_f|psi_i>|^2` for normalized states.
pub fn success_probability(psi_i: &StateVector, psi_f: &StateVector) -> Result<f64> {
    Ok(psi_f.inner(psi_i)?.norm_sqr().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectiveSuccess {
    /// `1 - (1 - P)^(2j)`.
    pub exact: f64,
    /// `2j P`.
    pub linearized: f64,
    /// `linearized - exact`.
    pub difference: f64,
}

/// Probability of at least one click among `2j` independent probes.
pub fn collective_success(single: f64, two_j: u32) -> Result<CollectiveSuccess> {
    if !(0.0..=1.0).contains(&single) {
        return Err(Error::InvalidParameter {
            name: "single_ps",
            reason: "must lie in [0, 1]",
        });
    }
    let exact = 1.0 - (1.0 - single).powi(two_j as i32);
    let linearized = two_j as f64 * single;
    Ok(CollectiveSuccess {
        exact,
        linearized,
        difference: linearized - exact,
    })
}

/// Success-probability advantage `P_collective / (2j P_single)`.
pub fn sigma_advantage(p_collective: f64, two_j: u32, p_single: f64) -> Result<f64> {
    if !(p_single > 0.0) || two_j == 0 {
        return Err(Error::InvalidParameter {
            name: "p_single",
            reason: "baseline must be positive",
        });
    }
    Ok(p_collective / (two_j as f64 * p_single))
}

/// `(A - <A>) |psi_i> / sqrt(Var A)`.
pub fn orthogonal_complement_state(psi_i: &StateVector, a: &Operator) -> Result<StateVector> {
    let var = variance(a, psi_i)?;
    if var <= 1e-14 {
        return Err(Error::ZeroVariance);
    }
    let psi = psi_i.normalize()?;
    let mean = a.expectation(&psi)?.re;
    let av = a.apply_raw(psi.amplitudes())?;
    let scale = 1.0 / var.sqrt();
    let amps = av
        .iter()
        .zip(psi.amplitudes())
        .map(|(x, p)| (x - p * mean) * scale)
        .collect();
    StateVector::new(amps)
}

/// How `sqrt(1 - P)` is treated when building the fixed-probability state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmallPs {
    /// `sqrt(P) |psi_i> + sqrt(1 - P) |psi_perp>`.
    #[default]
    Exact,
    /// `sqrt(1 - P)` replaced by one before normalizing, the small-`P` form.
    Approximate,
}

/// Postselection state with overlap `sqrt(target_ps)` with `psi_i`, tilted
/// along the direction that maximizes the weak value.
pub fn postselection_state_fixed_ps(
    psi_i: &StateVector,
    a: &Operator,
    target_ps: f64,
    mode: SmallPs,
) -> Result<StateVector> {
    if !(target_ps > 0.0 && target_ps < 1.0) {
        return Err(Error::InvalidParameter {
            name: "target_ps",
            reason: "must lie in (0, 1)",
        });
    }
    let perp = orthogonal_complement_state(psi_i, a)?;
    let psi = psi_i.normalize()?;
    let along = target_ps.sqrt();
    let across = match mode {
        SmallPs::Exact => (1.0 - target_ps).sqrt(),
        SmallPs::Approximate => 1.0,
    };
    let amps = psi
        .amplitudes()
        .iter()
        .zip(perp.amplitudes())
        .map(|(p, q)| p * along + q * across)
        .collect();
    StateVector::new(amps)
}

/// `sqrt(Var(A) / P)`, the small-`P` ceiling on `|A_w|`.
pub fn max_weak_value_bound(psi_i: &StateVector, a: &Operator, target_ps: f64) -> Result<f64> {
    if !(target_ps > 0.0 && target_ps <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "target_ps",
            reason: "must lie in (0, 1]",
        });
    }
    Ok((variance(a, psi_i)? / target_ps).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategyKind {
    /// GHZ-like state with `A = Jz`, postselection at a fixed weak value.
    LinearOptimal {
        weak_value_target: f64,
    },
    /// GHZ-like state with `A = Jz`, postselection at a fixed success probability.
    LinearFixedPs {
        target_ps: f64,
    },
    /// `(|j,0> + |j,-j>)` with `A = J^2 - Jz^2` and the closed-form
    /// postselection state `(sqrt(k) j + 1)|j,0> + (sqrt(k) j - 1)|j,-j>`.
    NonlinearJoint {
        kappa: f64,
    },
    /// Same initial state, postselection built at exactly `P = kappa j^2`.
    NonlinearJointExact {
        kappa: f64,
    },
    NearDeterministic {
        epsilon: f64,
    },
    /// Single qubit, `A = sigma_x`, `|down>` to `sin t |down> + i cos t |up>`.
    Uncorrelated {
        theta: f64,
    },
    Custom,
}

/// One weak-value amplification experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakValueStrategy {
    kind: StrategyKind,
    system: SpinSpace,
    psi_i: StateVector,
    psi_f: StateVector,
    observable: Operator,
    meter: FockSpace,
    eta: C64,
    phi_i: StateVector,
    meter_observable: Operator,
    coupling: f64,
    initial_overlap: C64,
}

impl WeakValueStrategy {
    /// Builds a strategy with a coherent meter of amplitude `eta` and `B = a^dagger a`.
    pub fn new(
        kind: StrategyKind,
        system: SpinSpace,
        psi_i: StateVector,
        psi_f: StateVector,
        observable: Operator,
        eta: C64,
        coupling: f64,
    ) -> Result<Self> {
        for s in [&psi_i, &psi_f] {
            if s.dim() != system.dim() {
                return Err(Error::DimensionMismatch {
                    expected: system.dim(),
                    found: s.dim(),
                });
            }
            if !s.is_normalized() {
                return Err(Error::NotNormalized { norm: s.norm() });
            }
        }
        if observable.dim() != system.dim() {
            return Err(Error::DimensionMismatch {
                expected: system.dim(),
                found: observable.dim(),
            });
        }
        observable.require_hermitian()?;
        if !coupling.is_finite() {
            return Err(Error::InvalidParameter {
                name: "g",
                reason: "must be finite",
            });
        }
        let meter = FockSpace::for_coherent(eta);
        let phi_i = meter.coherent_state(eta)?;
        let meter_observable = meter.number();
        let initial_overlap = psi_f.inner(&psi_i)?;
        Ok(Self {
            kind,
            system,
            psi_i,
            psi_f,
            observable,
            meter,
            eta,
            phi_i,
            meter_observable,
            coupling,
            initial_overlap,
        })
    }

    /// Replaces the meter state and observable.
    pub fn with_meter(
        mut self,
        meter: FockSpace,
        phi_i: StateVector,
        meter_observable: Operator,
    ) -> Result<Self> {
        if phi_i.dim() != meter.dim() || meter_observable.dim() != meter.dim() {
            return Err(Error::DimensionMismatch {
                expected: meter.dim(),
                found: phi_i.dim(),
            });
        }
        meter_observable.require_hermitian()?;
        self.meter = meter;
        self.phi_i = phi_i;
        self.meter_observable = meter_observable;
        Ok(self)
    }

    /// Coherent meter `|eta>` with `B = a^dagger a`.
    pub fn with_eta(self, eta: C64) -> Result<Self> {
        let meter = FockSpace::for_coherent(eta);
        let phi = meter.coherent_state(eta)?;
        let b = meter.number();
        let mut s = self.with_meter(meter, phi, b)?;
        s.eta = eta;
        Ok(s)
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.coupling = g;
        self
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }
    pub fn system(&self) -> SpinSpace {
        self.system
    }
    pub fn psi_i(&self) -> &StateVector {
        &self.psi_i
    }
    pub fn psi_f(&self) -> &StateVector {
        &self.psi_f
    }
    pub fn observable(&self) -> &Operator {
        &self.observable
    }
    pub fn meter(&self) -> FockSpace {
        self.meter
    }
    pub fn eta(&self) -> C64 {
        self.eta
    }
    pub fn phi_i(&self) -> &StateVector {
        &self.phi_i
    }
    pub fn meter_observable(&self) -> &Operator {
        &self.meter_observable
    }
    pub fn coupling(&self) -> f64 {
        self.coupling
    }
    /// `<psi_f|psi_i>` recorded at construction.
    pub fn initial_overlap(&self) -> C64 {
        self.initial_overlap
    }

    pub fn weak_value(&self) -> Result<C64> {
        weak_value(&self.psi_i, &self.psi_f, &self.observable)
    }

    pub fn success_probability(&self) -> f64 {
        self.initial_overlap.norm_sqr().min(1.0)
    }

    /// `|psi_i> (x) |phi_i>` after the kick `exp(-i g A (x) B)`.
    pub fn evolved_joint(&self, g: f64) -> Result<StateVector> {
        let u = expm_i_product(&self.observable, &self.meter_observable, g)?;
        let joint = self.psi_i.tensor(&self.phi_i)?;
        StateVector::new(u.apply_raw(joint.amplitudes())?)
    }

    /// Unnormalized meter state `<psi_f| exp(-i g A (x) B) |psi_i>|phi_i>`;
    /// its squared norm is the exact success probability.
    pub fn conditional_meter(&self, g: f64) -> Result<Vec<C64>> {
        let joint = self.evolved_joint(g)?;
        contract_first(joint.amplitudes(), &self.psi_f)
    }

    /// Two Dicke components holding all of `psi_i` and `psi_f`, if any.
    pub fn two_component_support(&self) -> Option<TwoComponentSupport> {
        let support: Vec<usize> = (0..self.system.dim())
            .filter(|&k| self.psi_i.amplitudes()[k] != ZERO || self.psi_f.amplitudes()[k] != ZERO)
            .collect();
        if support.len() != 2 {
            return None;
        }
        let (k1, k2) = (support[0], support[1]);
        Some(TwoComponentSupport {
            m1: self.system.m_at(k1),
            m2: self.system.m_at(k2),
            initial: (self.psi_i.amplitudes()[k1], self.psi_i.amplitudes()[k2]),
            postselected: (self.psi_f.amplitudes()[k1], self.psi_f.amplitudes()[k2]),
        })
    }
}

/// Coefficients of the initial and postselected states on two Dicke levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoComponentSupport {
    pub m1: HalfInt,
    pub m2: HalfInt,
    pub initial: (C64, C64),
    pub postselected: (C64, C64),
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn ghz_state(space: SpinSpace) -> Result<StateVector> {
    let j = space.j_half();
    space.superpose(&[(j, ONE), (-j, ONE)])
}

/// `(|j,0> + |j,-j>) / sqrt(2)`.
pub fn nonlinear_initial_state(space: SpinSpace) -> Result<StateVector> {
    space.require_integer_j()?;
    space.superpose(&[(HalfInt::ZERO, ONE), (-space.j_half(), ONE)])
}

/// Fixed-weak-value linear strategy: `psi_f ~ (j + A_w)|j,j> + (j - A_w)|j,-j>`.
pub fn strategy_linear_optimal(two_j: u32, weak_value_target: f64) -> Result<WeakValueStrategy> {
    if !weak_value_target.is_finite() {
        return Err(Error::InvalidParameter {
            name: "weak_value_target",
            reason: "must be finite",
        });
    }
    let space = SpinSpace::new(two_j)?;
    let j = space.j();
    let psi_i = ghz_state(space)?;
    let psi_f = space.superpose(&[
        (space.j_half(), real(j + weak_value_target)),
        (-space.j_half(), real(j - weak_value_target)),
    ])?;
    let a = space.op(ObservableKind::Jz).matrix;
    WeakValueStrategy::new(
        StrategyKind::LinearOptimal { weak_value_target },
        space,
        psi_i,
        psi_f,
        a,
        DEFAULT_ETA,
        DEFAULT_COUPLING,
    )
}

/// Linear strategy whose postselection succeeds with probability `target_ps`.
pub fn strategy_linear_fixed_ps(two_j: u32, target_ps: f64) -> Result<WeakValueStrategy> {
    let space = SpinSpace::new(two_j)?;
    let psi_i = ghz_state(space)?;
    let a = space.op(ObservableKind::Jz).matrix;
    let psi_f = postselection_state_fixed_ps(&psi_i, &a, target_ps, SmallPs::Exact)?;
    WeakValueStrategy::new(
        StrategyKind::LinearFixedPs { target_ps },
        space,
        psi_i,
        psi_f,
        a,
        DEFAULT_ETA,
        DEFAULT_COUPLING,
    )
}

fn check_kappa(space: SpinSpace, kappa: f64) -> Result<()> {
    space.require_integer_j()?;
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            reason: "must be positive",
        });
    }
    if kappa * space.j() * space.j() >= MAX_KAPPA_J2 {
        return Err(Error::InvalidParameter {
            name: "kappa",
            reason: "kappa * j^2 must stay below 0.1",
        });
    }
    Ok(())
}

/// Joint strategy with the closed-form postselection state
/// `(sqrt(kappa) j + 1)|j,0> + (sqrt(kappa) j - 1)|j,-j>`.
///
/// `P_s = kappa j^2 / (1 + kappa j^2)` and `A_w = (j^2 + 2j)/2 + j / (2 sqrt(kappa))`.
pub fn strategy_nonlinear_joint(two_j: u32, kappa: f64) -> Result<WeakValueStrategy> {
    let space = SpinSpace::new(two_j)?;
    check_kappa(space, kappa)?;
    let sk = kappa.sqrt() * space.j();
    let psi_f = space.superpose(&[
        (HalfInt::ZERO, real(sk + 1.0)),
        (-space.j_half(), real(sk - 1.0)),
    ])?;
    WeakValueStrategy::new(
        StrategyKind::NonlinearJoint { kappa },
        space,
        nonlinear_initial_state(space)?,
        psi_f,
        space.op(ObservableKind::NonlinearA).matrix,
        DEFAULT_ETA,
        DEFAULT_COUPLING,
    )
}

/// Joint strategy with `psi_f` built at exactly `P_s = kappa j^2`.
pub fn strategy_nonlinear_joint_exact(two_j: u32, kappa: f64) -> Result<WeakValueStrategy> {
    let space = SpinSpace::new(two_j)?;
    check_kappa(space, kappa)?;
    let psi_i = nonlinear_initial_state(space)?;
    let a = space.op(ObservableKind::NonlinearA).matrix;
    let psi_f =
        postselection_state_fixed_ps(&psi_i, &a, kappa * space.j() * space.j(), SmallPs::Exact)?;
    WeakValueStrategy::new(
        StrategyKind::NonlinearJointExact { kappa },
        space,
        psi_i,
        psi_f,
        a,
        DEFAULT_ETA,
        DEFAULT_COUPLING,
    )
}

/// `psi_f ~ (1 + sqrt(eps))|j,0> + (1 - sqrt(eps))|j,-j>`, succeeding with `1/(1+eps)`.
pub fn strategy_near_deterministic(two_j: u32, epsilon: f64) -> Result<WeakValueStrategy> {
    let space = SpinSpace::new(two_j)?;
    space.require_integer_j()?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: "must lie in (0, 1)",
        });
    }
    let se = epsilon.sqrt();
    let psi_f = space.superpose(&[
        (HalfInt::ZERO, real(1.0 + se)),
        (-space.j_half(), real(1.0 - se)),
    ])?;
    WeakValueStrategy::new(
        StrategyKind::NearDeterministic { epsilon },
        space,
        nonlinear_initial_state(space)?,
        psi_f,
        space.op(ObservableKind::NonlinearA).matrix,
        DEFAULT_ETA,
        DEFAULT_COUPLING,
    )
}

/// Single-qubit reference with `A = sigma_x`.
pub fn strategy_uncorrelated(theta: f64) -> Result<WeakValueStrategy> {
    if !(theta > 0.0 && theta <= core::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidParameter {
            name: "theta",
            reason: "must lie in (0, pi/2]",
        });
    }
    let space = SpinSpace::new(1)?;
    let up = HalfInt::from_twice(1);
    let down = -up;
    let psi_i = space.dicke(down)?;
    let psi_f = space.superpose(&[(down, real(theta.sin())), (up, C64::new(0.0, theta.cos()))])?;
    let jp = space.op(ObservableKind::Jplus).matrix;
    let sigma_x = jp.add(&jp.adjoint())?;
    WeakValueStrategy::new(
        StrategyKind::Uncorrelated { theta },
        space,
        psi_i,
        psi_f,
        sigma_x,
        DEFAULT_ETA,
        DEFAULT_COUPLING,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostselectionResult {
    pub weak_value: C64,
    pub success_prob_exact: f64,
    /// `|<psi_f|psi_i>|^2`.
    pub success_prob_zeroth: f64,
    pub kicked_meter_exact: StateVector,
    /// `exp(-i g A_w B)|phi_i>`, normalized.
    pub kicked_meter_firstorder: StateVector,
    pub fidelity_exact_vs_firstorder: f64,
}

/// Kicks, postselects and compares against the weak-value kick.
pub fn postselect(strategy: &WeakValueStrategy) -> Result<PostselectionResult> {
    let g = strategy.coupling;
    let weak_value = strategy.weak_value()?;
    let raw = strategy.conditional_meter(g)?;
    let success_prob_exact: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
    if success_prob_exact < NULL_PROBABILITY {
        return Err(Error::NullPostselection {
            overlap: strategy.initial_overlap,
        });
    }
    let kicked_meter_exact = StateVector::new(raw)?;
    let m = exp_scaled(&strategy.meter_observable, C64::new(0.0, -g) * weak_value)?;
    let kicked_meter_firstorder = m.apply(&strategy.phi_i)?.normalize()?;
    let fidelity_exact_vs_firstorder = kicked_meter_exact.fidelity(&kicked_meter_firstorder)?;
    Ok(PostselectionResult {
        weak_value,
        success_prob_exact: success_prob_exact.min(1.0),
        success_prob_zeroth: strategy.success_probability(),
        kicked_meter_exact,
        kicked_meter_firstorder,
        fidelity_exact_vs_firstorder,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeterReadout {
    /// `<R>` on the exact kicked meter minus `<R>` on `phi_i`.
    pub exact: f64,
    /// `2 g Im(A_w) Re(<R B>_phi_i)`.
    pub firstorder_formula: f64,
}

pub fn meter_readout(
    result: &PostselectionResult,
    r: &Operator,
    strategy: &WeakValueStrategy,
) -> Result<MeterReadout> {
    r.require_hermitian()?;
    let phi = &strategy.phi_i;
    let exact = r.expectation(&result.kicked_meter_exact)?.re - r.expectation(phi)?.re;
    let rb = r.matmul(&strategy.meter_observable)?.expectation(phi)?;
    let firstorder_formula = 2.0 * strategy.coupling * result.weak_value.im * rb.re;
    Ok(MeterReadout {
        exact,
        firstorder_formula,
    })
}

/// Quadrature `x - <x>_phi_i` on the strategy's meter, so `<R>_phi_i = 0`.
pub fn centered_quadrature(strategy: &WeakValueStrategy) -> Result<Operator> {
    let x = strategy.meter.quadrature_x();
    let mean = x.expectation(&strategy.phi_i)?.re;
    x.sub(&Operator::identity(x.dim()).scale(real(mean)))
}
