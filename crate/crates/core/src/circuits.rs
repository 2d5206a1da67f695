//! Full-amplitude simulation of the control-SWAP superposition circuits.
//!
//! Registers are laid out as `ancilla (x) reg1 (x) reg2 (x) passenger`, with
//! the ancilla as the most significant index. `reg1` and `reg2` each hold
//! `2j` qubits; the passenger is an optional meter that rides along with
//! whatever system state enters `reg1` and is never swapped.
//!
//! Two ancilla conventions are used throughout: the *prepared* ancilla is
//! always `alpha|0> + beta|1>`, and the *projected* ancilla is the state
//! weighted by the reference overlaps.
//!
//! Dicke states are embedded directly as symmetric bitstring superpositions.
//! No gate decomposition of the Dicke unitaries is attempted.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{StateVector, C64, DEFAULT_MAX_JOINT_DIM, NORM_TOLERANCE, ONE, ZERO};
use crate::spin::{HalfInt, SpinSpace};
use crate::wva::WeakValueStrategy;
use crate::{Error, Result};

/// Largest `2j` for which registers are simulated amplitude by amplitude.
pub const MAX_REGISTER_TWO_J: u32 = 10;

/// `C(n, k)` in floating point.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn register_dim(two_j: u32) -> Result<usize> {
    if two_j == 0 || two_j > MAX_REGISTER_TWO_J {
        return Err(Error::RegisterTooLarge { two_j });
    }
    Ok(1usize << two_j)
}

fn ones_for(space: SpinSpace, m: HalfInt) -> Result<u32> {
    space.index_of(m)?;
    Ok(((space.two_j() as i32 + m.twice()) / 2) as u32)
}

/// `|j,m>` as a `2^(2j)` amplitude vector: the uniform superposition of
/// bitstrings with `j + m` ones.
pub fn embed_dicke(two_j: u32, m: HalfInt) -> Result<StateVector> {
    let dim = register_dim(two_j)?;
    let space = SpinSpace::new(two_j)?;
    let ones = ones_for(space, m)?;
    let amp = C64::new(1.0 / binomial(two_j, ones).sqrt(), 0.0);
    let amps = (0..dim)
        .map(|b| {
            if (b as u32).count_ones() == ones {
                amp
            } else {
                ZERO
            }
        })
        .collect();
    StateVector::from_normalized(amps)
}

/// Inverse of [`embed_dicke`] on the symmetric subspace: Dicke-basis
/// components of a register vector plus the weight left outside it.
pub fn project_to_dicke(two_j: u32, register: &[C64]) -> Result<(Vec<C64>, f64)> {
    let dim = register_dim(two_j)?;
    if register.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: register.len(),
        });
    }
    let space = SpinSpace::new(two_j)?;
    let mut coeffs = vec![ZERO; space.dim()];
    for (b, a) in register.iter().enumerate() {
        let ones = (b as u32).count_ones() as i32;
        let k = space.index_of(HalfInt::from_twice(2 * ones - two_j as i32))?;
        coeffs[k] += a;
    }
    let mut inside = 0.0;
    for (k, c) in coeffs.iter_mut().enumerate() {
        let ones = ((two_j as i32 + space.m_at(k).twice()) / 2) as u32;
        *c /= binomial(two_j, ones).sqrt();
        inside += c.norm_sqr();
    }
    let total: f64 = register.iter().map(|a| a.norm_sqr()).sum();
    Ok((coeffs, (total - inside).max(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceKind {
    /// `|+>^(2j)`.
    PlusAll,
    /// `(|j,m1> + |j,m2>) / sqrt(2)`.
    DickeSuperposition { m1: HalfInt, m2: HalfInt },
}

/// Reference state `|zeta>` on a `2j`-qubit register.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceState {
    two_j: u32,
    kind: ReferenceKind,
}

impl ReferenceState {
    pub fn plus_all(two_j: u32) -> Result<Self> {
        SpinSpace::new(two_j)?;
        Ok(Self {
            two_j,
            kind: ReferenceKind::PlusAll,
        })
    }

    pub fn dicke_superposition(two_j: u32, m1: HalfInt, m2: HalfInt) -> Result<Self> {
        let space = SpinSpace::new(two_j)?;
        space.index_of(m1)?;
        space.index_of(m2)?;
        if m1 == m2 {
            return Err(Error::InvalidParameter {
                name: "zeta",
                reason: "Dicke components must differ",
            });
        }
        Ok(Self {
            two_j,
            kind: ReferenceKind::DickeSuperposition { m1, m2 },
        })
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn kind(&self) -> ReferenceKind {
        self.kind
    }

    /// `<j,m|zeta>` in closed form.
    pub fn dicke_overlap(&self, m: HalfInt) -> Result<C64> {
        let space = SpinSpace::new(self.two_j)?;
        let ones = ones_for(space, m)?;
        let v = match self.kind {
            ReferenceKind::PlusAll => {
                (binomial(self.two_j, ones) / (1u64 << self.two_j) as f64).sqrt()
            }
            ReferenceKind::DickeSuperposition { m1, m2 } => {
                if m == m1 || m == m2 {
                    core::f64::consts::FRAC_1_SQRT_2
                } else {
                    0.0
                }
            }
        };
        Ok(C64::new(v, 0.0))
    }

    /// Computational-basis amplitudes.
    pub fn vector(&self) -> Result<StateVector> {
        let dim = register_dim(self.two_j)?;
        match self.kind {
            ReferenceKind::PlusAll => {
                let a = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
                StateVector::from_normalized(vec![a; dim])
            }
            ReferenceKind::DickeSuperposition { m1, m2 } => {
                let a = embed_dicke(self.two_j, m1)?;
                let b = embed_dicke(self.two_j, m2)?;
                let amps = a
                    .amplitudes()
                    .iter()
                    .zip(b.amplitudes())
                    .map(|(x, y)| (x + y) * core::f64::consts::FRAC_1_SQRT_2)
                    .collect();
                StateVector::from_normalized(amps)
            }
        }
    }
}

/// `ancilla (x) reg1 (x) reg2 (x) passenger` amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitRegisterState {
    two_j: u32,
    passenger_dim: usize,
    amps: Vec<C64>,
}

impl CircuitRegisterState {
    fn check_size(two_j: u32, passenger_dim: usize) -> Result<usize> {
        let r = register_dim(two_j)?;
        let total = 2 * r * r * passenger_dim.max(1);
        if passenger_dim == 0 || total > DEFAULT_MAX_JOINT_DIM {
            return Err(Error::RegisterTooLarge { two_j });
        }
        Ok(total)
    }

    pub fn from_amplitudes(two_j: u32, passenger_dim: usize, amps: Vec<C64>) -> Result<Self> {
        let total = Self::check_size(two_j, passenger_dim)?;
        if amps.len() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                found: amps.len(),
            });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE * 1e2 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            two_j,
            passenger_dim,
            amps,
        })
    }

    /// `ancilla (x) first (x) reg2`, where `first` is a joint `reg1 (x) passenger`
    /// vector that is re-ordered into the fixed layout.
    pub fn from_parts(
        two_j: u32,
        ancilla: [C64; 2],
        first: &StateVector,
        reg2: &StateVector,
        passenger_dim: usize,
    ) -> Result<Self> {
        let total = Self::check_size(two_j, passenger_dim)?;
        let r = 1usize << two_j;
        if first.dim() != r * passenger_dim {
            return Err(Error::DimensionMismatch {
                expected: r * passenger_dim,
                found: first.dim(),
            });
        }
        if reg2.dim() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: reg2.dim(),
            });
        }
        let an = (ancilla[0].norm_sqr() + ancilla[1].norm_sqr()).sqrt();
        if (an - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm: an });
        }
        let mut amps = vec![ZERO; total];
        let f = first.amplitudes();
        let z = reg2.amplitudes();
        for (a, ca) in ancilla.iter().enumerate() {
            for r1 in 0..r {
                for (r2, cz) in z.iter().enumerate() {
                    let base = ((a * r + r1) * r + r2) * passenger_dim;
                    for p in 0..passenger_dim {
                        amps[base + p] = ca * f[r1 * passenger_dim + p] * cz;
                    }
                }
            }
        }
        Self::from_amplitudes(two_j, passenger_dim, amps)
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn passenger_dim(&self) -> usize {
        self.passenger_dim
    }

    pub fn register_dim(&self) -> usize {
        1 << self.two_j
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Exchanges `reg1` and `reg2` on the ancilla-`|1>` half.
    pub fn control_swap(&self) -> Self {
        let r = self.register_dim();
        let p = self.passenger_dim;
        let mut amps = self.amps.clone();
        let half = r * r * p;
        for r1 in 0..r {
            for r2 in 0..r {
                let src = half + (r1 * r + r2) * p;
                let dst = half + (r2 * r + r1) * p;
                amps[dst..dst + p].copy_from_slice(&self.amps[src..src + p]);
            }
        }
        Self {
            two_j: self.two_j,
            passenger_dim: p,
            amps,
        }
    }

    /// Applies `<ancilla| <reg1| <reg2|` for the registers given, leaving the
    /// rest (in layout order) as an unnormalized vector.
    pub fn contract(
        &self,
        ancilla: Option<[C64; 2]>,
        reg1: Option<&[C64]>,
        reg2: Option<&[C64]>,
    ) -> Result<Vec<C64>> {
        let r = self.register_dim();
        let p = self.passenger_dim;
        for v in [reg1, reg2].into_iter().flatten() {
            if v.len() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    found: v.len(),
                });
            }
        }
        let na = if ancilla.is_some() { 1 } else { 2 };
        let n1 = if reg1.is_some() { 1 } else { r };
        let n2 = if reg2.is_some() { 1 } else { r };
        let mut out = vec![ZERO; na * n1 * n2 * p];
        for a in 0..2 {
            let wa = ancilla.map_or(ONE, |v| v[a].conj());
            let oa = if ancilla.is_some() { 0 } else { a };
            for r1 in 0..r {
                let w1 = reg1.map_or(ONE, |v| v[r1].conj());
                let o1 = if reg1.is_some() { 0 } else { r1 };
                let w = wa * w1;
                if w == ZERO {
                    continue;
                }
                for r2 in 0..r {
                    let w2 = reg2.map_or(ONE, |v| v[r2].conj());
                    let o2 = if reg2.is_some() { 0 } else { r2 };
                    let ww = w * w2;
                    if ww == ZERO {
                        continue;
                    }
                    let src = ((a * r + r1) * r + r2) * p;
                    let dst = ((oa * n1 + o1) * n2 + o2) * p;
                    for k in 0..p {
                        out[dst + k] += ww * self.amps[src + k];
                    }
                }
            }
        }
        Ok(out)
    }
}

fn check_superposition(alpha: C64, beta: C64, m1: HalfInt, m2: HalfInt) -> Result<()> {
    let n = alpha.norm_sqr() + beta.norm_sqr();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm: n.sqrt() });
    }
    if m1 == m2 {
        return Err(Error::InvalidParameter {
            name: "m2",
            reason: "must differ from m1",
        });
    }
    Ok(())
}

fn reference_overlaps(zeta: &ReferenceState, m1: HalfInt, m2: HalfInt) -> Result<(C64, C64)> {
    let c1 = zeta.dicke_overlap(m1)?;
    let c2 = zeta.dicke_overlap(m2)?;
    if c1.norm() < 1e-300 || c2.norm() < 1e-300 {
        return Err(Error::ZeroReferenceOverlap);
    }
    Ok((c1, c2))
}

/// Normalized `|<j,m1|zeta>| |0> + |<j,m2|zeta>| |1>`.
fn prep_projected_ancilla(c1: C64, c2: C64) -> [C64; 2] {
    let n = (c1.norm_sqr() + c2.norm_sqr()).sqrt();
    [C64::new(c1.norm() / n, 0.0), C64::new(c2.norm() / n, 0.0)]
}

/// Preparation success probabilities from the three candidate formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepFormulas {
    /// `|c1|^2 |c2|^2 / (|c1|^2 + |c2|^2)`: projective ancilla measurement onto
    /// the normalized overlap-weighted state. Equals the brute-force value.
    pub projective: f64,
    /// `|c1|^2 |c2|^2`, the product of normalized-Dicke overlaps.
    pub overlap_product: f64,
    /// For `|+>^(2j)` with `m1 = 0, m2 = -j`: `2^(-4j) C(2j, j)^2`, the value
    /// obtained with unnormalized Dicke overlaps. `None` for other settings.
    pub unnormalized_dicke: Option<f64>,
}

pub fn prep_formulas(zeta: &ReferenceState, m1: HalfInt, m2: HalfInt) -> Result<PrepFormulas> {
    let (c1, c2) = reference_overlaps(zeta, m1, m2)?;
    let (a, b) = (c1.norm_sqr(), c2.norm_sqr());
    let two_j = zeta.two_j();
    let standard = zeta.kind() == ReferenceKind::PlusAll
        && two_j.is_multiple_of(2)
        && m1 == HalfInt::ZERO
        && m2 == HalfInt::from_twice(-(two_j as i32));
    let unnormalized_dicke = standard.then(|| {
        let c = binomial(two_j, two_j / 2);
        c * c / 2f64.powi(2 * two_j as i32)
    });
    Ok(PrepFormulas {
        projective: a * b / (a + b),
        overlap_product: a * b,
        unnormalized_dicke,
    })
}

/// `2^(-4j) C(2j, j)`, the overlap product for `|+>^(2j)`, `m1 = 0`, `m2 = -j`.
pub fn prep_overlap_product_standard(two_j: u32) -> f64 {
    binomial(two_j, two_j / 2) / 2f64.powi(2 * two_j as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepOutcome {
    /// Normalized output of `reg1` in the Dicke basis.
    pub output_system: StateVector,
    pub success_prob: f64,
    /// Weight of the conditional `reg1` state outside the symmetric subspace,
    /// relative to its norm.
    pub leakage: f64,
    pub formulas: PrepFormulas,
}

/// Superposes `|j,m1>` and `|j,m2>` with weights `alpha`, `beta` by
/// control-SWAP and projection of `reg2` on `zeta` and the ancilla on the
/// overlap-weighted state.
pub fn prep_circuit(
    two_j: u32,
    m1: HalfInt,
    m2: HalfInt,
    alpha: C64,
    beta: C64,
    zeta: &ReferenceState,
) -> Result<PrepOutcome> {
    check_superposition(alpha, beta, m1, m2)?;
    if zeta.two_j() != two_j {
        return Err(Error::DimensionMismatch {
            expected: two_j as usize,
            found: zeta.two_j() as usize,
        });
    }
    let formulas = prep_formulas(zeta, m1, m2)?;
    let (c1, c2) = reference_overlaps(zeta, m1, m2)?;
    let d1 = embed_dicke(two_j, m1)?;
    let d2 = embed_dicke(two_j, m2)?;
    let input = CircuitRegisterState::from_parts(two_j, [alpha, beta], &d1, &d2, 1)?;
    let swapped = input.control_swap();
    let z = zeta.vector()?;
    let mu = prep_projected_ancilla(c1, c2);
    let out = swapped.contract(Some(mu), None, Some(z.amplitudes()))?;
    let success_prob: f64 = out.iter().map(|a| a.norm_sqr()).sum();
    if success_prob < 1e-300 {
        return Err(Error::NullPostselection { overlap: ZERO });
    }
    let (coeffs, outside) = project_to_dicke(two_j, &out)?;
    Ok(PrepOutcome {
        output_system: StateVector::new(coeffs)?,
        success_prob,
        leakage: outside / success_prob,
        formulas,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureOutcome {
    pub p_tilde: f64,
    /// Normalized meter state left after a successful run.
    pub conditional_meter: StateVector,
}

/// Normalized `<zeta|j,m1> |0> + <zeta|j,m2> |1>`.
fn measure_projected_ancilla(c1: C64, c2: C64) -> [C64; 2] {
    let lambda = 1.0 / (c1.norm_sqr() + c2.norm_sqr()).sqrt();
    [c1.conj() * lambda, c2.conj() * lambda]
}

fn check_joint(two_j: u32, joint: &StateVector, meter_dim: usize) -> Result<SpinSpace> {
    let space = SpinSpace::new(two_j)?;
    if meter_dim == 0 || joint.dim() != space.dim() * meter_dim {
        return Err(Error::DimensionMismatch {
            expected: space.dim() * meter_dim,
            found: joint.dim(),
        });
    }
    Ok(space)
}

/// Runs the measurement circuit on a system (x) meter state: the system
/// enters `reg1` with the meter as passenger, `zeta` enters `reg2`, the
/// ancilla starts in `alpha|0> + beta|1>` and the outcome kept is the
/// overlap-weighted ancilla with `|j,m1>` on `reg1` and `|j,m2>` on `reg2`.
///
/// A successful run postselects the system on `conj(alpha)|j,m1> + conj(beta)|j,m2>`.
#[allow(clippy::too_many_arguments)]
pub fn measure_circuit(
    two_j: u32,
    joint: &StateVector,
    meter_dim: usize,
    m1: HalfInt,
    m2: HalfInt,
    alpha: C64,
    beta: C64,
    zeta: &ReferenceState,
) -> Result<MeasureOutcome> {
    check_superposition(alpha, beta, m1, m2)?;
    let space = check_joint(two_j, joint, meter_dim)?;
    let (c1, c2) = reference_overlaps(zeta, m1, m2)?;
    let r = register_dim(two_j)?;
    CircuitRegisterState::check_size(two_j, meter_dim)?;

    let psi = joint.normalize()?;
    let mut first = vec![ZERO; r * meter_dim];
    for k in 0..space.dim() {
        let e = embed_dicke(two_j, space.m_at(k))?;
        for (b, eb) in e.amplitudes().iter().enumerate() {
            if *eb == ZERO {
                continue;
            }
            for p in 0..meter_dim {
                first[b * meter_dim + p] += eb * psi.amplitudes()[k * meter_dim + p];
            }
        }
    }
    let first = StateVector::from_normalized(first)?;
    let input =
        CircuitRegisterState::from_parts(two_j, [alpha, beta], &first, &zeta.vector()?, meter_dim)?;
    let swapped = input.control_swap();
    let nu = measure_projected_ancilla(c1, c2);
    let d1 = embed_dicke(two_j, m1)?;
    let d2 = embed_dicke(two_j, m2)?;
    let out = swapped.contract(Some(nu), Some(d1.amplitudes()), Some(d2.amplitudes()))?;
    finish_measure(out)
}

fn finish_measure(out: Vec<C64>) -> Result<MeasureOutcome> {
    let p_tilde: f64 = out.iter().map(|a| a.norm_sqr()).sum();
    if p_tilde < 1e-300 {
        return Err(Error::NullPostselection { overlap: ZERO });
    }
    Ok(MeasureOutcome {
        p_tilde,
        conditional_meter: StateVector::new(out)?,
    })
}

/// Closed form of [`measure_circuit`] from the reference overlaps, valid for any `j`:
/// `|c1|^2 |c2|^2 / (|c1|^2 + |c2|^2) * |alpha <j,m1|Psi> + beta <j,m2|Psi>|^2`.
#[allow(clippy::too_many_arguments)]
pub fn measure_circuit_analytic(
    two_j: u32,
    joint: &StateVector,
    meter_dim: usize,
    m1: HalfInt,
    m2: HalfInt,
    alpha: C64,
    beta: C64,
    c1: C64,
    c2: C64,
) -> Result<MeasureOutcome> {
    check_superposition(alpha, beta, m1, m2)?;
    let space = check_joint(two_j, joint, meter_dim)?;
    if c1.norm() < 1e-300 || c2.norm() < 1e-300 {
        return Err(Error::ZeroReferenceOverlap);
    }
    let psi = joint.normalize()?;
    let (k1, k2) = (space.index_of(m1)?, space.index_of(m2)?);
    let weight = (c1.norm_sqr() * c2.norm_sqr() / (c1.norm_sqr() + c2.norm_sqr())).sqrt();
    let a = psi.amplitudes();
    let out = (0..meter_dim)
        .map(|p| (alpha * a[k1 * meter_dim + p] + beta * a[k2 * meter_dim + p]) * weight)
        .collect();
    finish_measure(out)
}

/// Ancilla weights that make [`measure_circuit`] postselect on a state
/// supported on `|j,m1>`, `|j,m2>` with coefficients `(f1, f2)`.
pub fn measurement_weights(f1: C64, f2: C64) -> Result<(C64, C64)> {
    let n = (f1.norm_sqr() + f2.norm_sqr()).sqrt();
    if n < 1e-300 {
        return Err(Error::ZeroVector);
    }
    Ok((f1.conj() / n, f2.conj() / n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapExpansionReport {
    pub weak_value: f64,
    /// `sqrt(kappa) j / sqrt(1 + kappa j^2)`.
    pub prefactor: f64,
    /// Largest Fock-component deviation between the exact conditional meter
    /// and `prefactor * exp(-i g A_w B)|phi_i>`.
    pub max_abs_deviation: f64,
    /// `max_abs_deviation` over the largest predicted component.
    pub relative_deviation: f64,
}

/// Compares the exact postselected meter amplitude for the closed-form joint
/// strategy with the exponentiated weak-value kick,
/// `A_w = (j^2 + 2j + j / sqrt(kappa)) / 2`.
pub fn overlap_expansion_check(
    two_j: u32,
    kappa: f64,
    g: f64,
    eta: C64,
) -> Result<OverlapExpansionReport> {
    let strategy: WeakValueStrategy = crate::wva::strategy_nonlinear_joint(two_j, kappa)?
        .with_eta(eta)?
        .with_coupling(g);
    let j = two_j as f64 / 2.0;
    let sk = kappa.sqrt() * j;
    let weak_value = 0.5 * (j * j + 2.0 * j + j / kappa.sqrt());
    let prefactor = sk / (1.0 + sk * sk).sqrt();
    let exact = strategy.conditional_meter(g)?;
    let kick =
        crate::linalg::exp_scaled(strategy.meter_observable(), C64::new(0.0, -g * weak_value))?;
    let predicted = kick.apply_raw(strategy.phi_i().amplitudes())?;
    let mut max_abs_deviation: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (e, p) in exact.iter().zip(&predicted) {
        let p = p * prefactor;
        max_abs_deviation = max_abs_deviation.max((e - p).norm());
        scale = scale.max(p.norm());
    }
    Ok(OverlapExpansionReport {
        weak_value,
        prefactor,
        max_abs_deviation,
        relative_deviation: max_abs_deviation / scale,
    })
}
