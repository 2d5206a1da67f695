//! Quantum Fisher information of the joint state and of the postselected meter.

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{expm_i, Operator, StateVector, Tensor, C64};
use crate::spin::{variance, SpinSpace};
use crate::wva::WeakValueStrategy;
use crate::{Error, Result};

/// Above this `|eta g A_w|` the first-order picture behind the ratio prediction breaks down.
pub const WEAK_REGIME_LIMIT: f64 = 0.1;

/// `4 Var(H)` on `psi`: the QFI of the family `exp(-i g H)|psi>`.
pub fn qfi_pure_generator(h: &Operator, psi: &StateVector) -> Result<f64> {
    h.require_hermitian()?;
    if !psi.is_normalized() {
        return Err(Error::NotNormalized { norm: psi.norm() });
    }
    Ok(4.0 * variance(h, psi)?)
}

fn pure_qfi(psi: &[C64], dpsi: &[C64]) -> f64 {
    let dd: f64 = dpsi.iter().map(|d| d.norm_sqr()).sum();
    let pd: C64 = psi.iter().zip(dpsi).map(|(p, d)| p.conj() * d).sum();
    4.0 * (dd - pd.norm_sqr())
}

fn central_difference<F>(family: &F, g: f64, h: f64) -> Result<alloc::vec::Vec<C64>>
where
    F: Fn(f64) -> Result<StateVector>,
{
    let plus = family(g + h)?;
    let minus = family(g - h)?;
    if plus.dim() != minus.dim() {
        return Err(Error::DimensionMismatch {
            expected: plus.dim(),
            found: minus.dim(),
        });
    }
    Ok(plus
        .amplitudes()
        .iter()
        .zip(minus.amplitudes())
        .map(|(p, m)| (p - m) / (2.0 * h))
        .collect())
}

/// Pure-state QFI `4(<d psi|d psi> - |<psi|d psi>|^2)` of a normalized family,
/// with the derivative from central differences at steps `h` and `h/2`
/// combined by one Richardson step.
///
/// The family must be smooth in `g`, including its global phase.
pub fn qfi_finite_difference<F>(family: F, g: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<StateVector>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "step",
            reason: "must be positive",
        });
    }
    let psi = family(g)?;
    if !psi.is_normalized() {
        return Err(Error::NotNormalized { norm: psi.norm() });
    }
    let coarse = central_difference(&family, g, step)?;
    let fine = central_difference(&family, g, step / 2.0)?;
    let d: alloc::vec::Vec<C64> = fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (f * 4.0 - c) / 3.0)
        .collect();
    Ok(pure_qfi(psi.amplitudes(), &d))
}

/// Differentiation step for a family whose phase sensitivity scales with `|A_w|`.
pub fn default_step(weak_value: C64) -> f64 {
    let a = weak_value.norm();
    1e-6 * if a > 0.0 { (1.0 / a).max(1.0) } else { 1.0 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearQfi {
    /// `4[(j^4 + 2j^3 + 2j^2)(|eta|^4 + |eta|^2)/2 - (j^4 + 4j^3 + 4j^2)|eta|^4/4]`.
    pub exact: f64,
    /// `2 j^4 |eta|^2`.
    pub approx: f64,
}

/// QFI of `(|j,0> + |j,-j>)/sqrt(2) (x) |eta>` under `exp(-i g (J^2 - Jz^2) (x) a^dagger a)`.
pub fn qfi_nonlinear_coherent(two_j: u32, eta: C64) -> Result<NonlinearQfi> {
    SpinSpace::new(two_j)?.require_integer_j()?;
    let j = two_j as f64 / 2.0;
    let e2 = eta.norm_sqr();
    let e4 = e2 * e2;
    let (j2, j3, j4) = (j * j, j * j * j, j * j * j * j);
    let exact = 4.0
        * (0.5 * (j4 + 2.0 * j3 + 2.0 * j2) * (e4 + e2) - 0.25 * (j4 + 4.0 * j3 + 4.0 * j2) * e4);
    Ok(NonlinearQfi {
        exact,
        approx: 2.0 * j4 * e2,
    })
}

/// `4 Var(A (x) B)` on `psi_i (x) phi_i` from the assembled operator.
pub fn qfi_joint(strategy: &WeakValueStrategy) -> Result<f64> {
    let h = strategy.observable().tensor(strategy.meter_observable())?;
    let psi = strategy.psi_i().tensor(strategy.phi_i())?;
    qfi_pure_generator(&h, &psi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherReport {
    /// `I(g)`, QFI of the joint state before postselection.
    pub qfi_total: f64,
    /// `I'(g)`: the postselected meter QFI weighted by the success probability.
    pub qfi_postselected: f64,
    /// QFI of the normalized postselected meter family, without the weight.
    pub qfi_meter: f64,
    /// Exact success probability at `g`.
    pub success_prob: f64,
    pub weak_value: C64,
    /// `qfi_postselected / qfi_total`.
    pub ratio: f64,
    /// `(1 - |eta g A_w|^2) / 2`.
    pub leading_order_ratio: f64,
    /// `2 j^4 |eta|^2`; only for the joint strategies.
    pub small_eta_prediction: Option<f64>,
    /// `|eta g A_w|`. The prediction assumes this is well below [`WEAK_REGIME_LIMIT`].
    pub weak_regime_parameter: f64,
}

impl FisherReport {
    pub fn in_weak_regime(&self) -> bool {
        self.weak_regime_parameter <= WEAK_REGIME_LIMIT
    }
}

/// Fisher information retained by postselection on `psi_f` at coupling `g`.
pub fn postselected_fisher_ratio(strategy: &WeakValueStrategy, g: f64) -> Result<FisherReport> {
    let weak_value = strategy.weak_value()?;
    let family = |x: f64| StateVector::new(strategy.conditional_meter(x)?);
    let raw = strategy.conditional_meter(g)?;
    let success_prob: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
    if success_prob < crate::linalg::NULL_PROBABILITY {
        return Err(Error::NullPostselection {
            overlap: strategy.initial_overlap(),
        });
    }
    let qfi_meter = qfi_finite_difference(family, g, default_step(weak_value))?;
    let qfi_postselected = success_prob * qfi_meter;
    let qfi_total = qfi_joint(strategy)?;
    let weak_regime_parameter = (strategy.eta() * g * weak_value).norm();
    let small_eta_prediction = match strategy.kind() {
        crate::wva::StrategyKind::NonlinearJoint { .. }
        | crate::wva::StrategyKind::NonlinearJointExact { .. } => {
            let j = strategy.system().j();
            Some(2.0 * j * j * j * j * strategy.eta().norm_sqr())
        }
        _ => None,
    };
    Ok(FisherReport {
        qfi_total,
        qfi_postselected,
        qfi_meter,
        success_prob,
        weak_value,
        ratio: if qfi_total > 0.0 {
            qfi_postselected / qfi_total
        } else {
            0.0
        },
        leading_order_ratio: 0.5 * (1.0 - weak_regime_parameter * weak_regime_parameter),
        small_eta_prediction,
        weak_regime_parameter,
    })
}

/// Finite-difference QFI of `exp(-i g H)|psi>` at `g = 0`.
pub fn qfi_unitary_family_fd(h: &Operator, psi: &StateVector, step: f64) -> Result<f64> {
    let family = |g: f64| expm_i(h, g)?.apply(psi)?.normalize();
    qfi_finite_difference(family, 0.0, step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boson::FockSpace;
    use crate::spin::{HalfInt, ObservableKind};
    use crate::wva::{nonlinear_initial_state, strategy_nonlinear_joint};

    #[test]
    fn eigenstate_has_zero_qfi() {
        let sp = SpinSpace::new(4).unwrap();
        let a = sp.op(ObservableKind::NonlinearA).matrix;
        assert!(
            qfi_pure_generator(&a, &sp.dicke(HalfInt::ZERO).unwrap())
                .unwrap()
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn product_generator_formula() {
        let sp = SpinSpace::new(6).unwrap();
        let a = sp.op(ObservableKind::NonlinearA).matrix;
        let psi = nonlinear_initial_state(sp).unwrap();
        let eta = C64::new(0.2, 0.1);
        let f = FockSpace::for_coherent(eta);
        let b = f.number();
        let phi = f.coherent_state(eta).unwrap();
        let q = qfi_pure_generator(&a.tensor(&b).unwrap(), &psi.tensor(&phi).unwrap()).unwrap();
        let m = |op: &Operator, s: &StateVector| op.expectation(s).unwrap().re;
        let a2 = a.matmul(&a).unwrap();
        let b2 = b.matmul(&b).unwrap();
        let oracle = 4.0 * (m(&a2, &psi) * m(&b2, &phi) - (m(&a, &psi) * m(&b, &phi)).powi(2));
        assert!((q - oracle).abs() / oracle < 1e-12);
        let closed = qfi_nonlinear_coherent(6, eta).unwrap().exact;
        assert!((q - closed).abs() / closed < 1e-8);
    }

    #[test]
    fn finite_difference_matches_variance() {
        let sp = SpinSpace::new(8).unwrap();
        let psi = nonlinear_initial_state(sp).unwrap();
        let a = sp.op(ObservableKind::NonlinearA).matrix;
        let exact = qfi_pure_generator(&a, &psi).unwrap();
        let fd = qfi_unitary_family_fd(&a, &psi, 1e-6).unwrap();
        assert!((fd - exact).abs() / exact < 1e-6, "{fd} {exact}");
    }

    #[test]
    fn nonlinear_closed_form() {
        assert_eq!(
            qfi_nonlinear_coherent(20, C64::new(0.0, 0.0))
                .unwrap()
                .exact,
            0.0
        );
        let q = qfi_nonlinear_coherent(20, C64::new(0.05, 0.0)).unwrap();
        assert!((q.approx - 50.0).abs() < 1e-12);
        // 4[6100 * 0.00250625 - 3600 * 6.25e-6] = 61.0625.
        assert!((q.exact - 61.0625).abs() < 1e-10);
        assert!(matches!(
            qfi_nonlinear_coherent(3, C64::new(0.1, 0.0)),
            Err(Error::RequiresIntegerSpin { .. })
        ));
    }

    #[test]
    fn ratio_report_fields() {
        let s = strategy_nonlinear_joint(12, 1e-3)
            .unwrap()
            .with_eta(C64::new(0.05, 0.0))
            .unwrap();
        let r = postselected_fisher_ratio(&s, 1e-4).unwrap();
        assert!(r.in_weak_regime());
        assert!(r.ratio > 0.0 && r.ratio < 1.0);
        assert!(
            (r.qfi_total - qfi_nonlinear_coherent(12, s.eta()).unwrap().exact).abs() / r.qfi_total
                < 1e-8
        );
        // The meter QFI is close to 4 |A_w|^2 Var(n) = 4 |A_w|^2 |eta|^2.
        let lead = 4.0 * r.weak_value.norm_sqr() * s.eta().norm_sqr();
        assert!((r.qfi_meter - lead).abs() / lead < 1e-2);
    }

    #[test]
    fn ratio_moves_at_second_order_in_coupling() {
        // The postselection probability grows as g^2 A_w^2 <n^2> faster than the
        // meter QFI shrinks, so the weighted ratio rises quadratically.
        let s = strategy_nonlinear_joint(12, 1e-3)
            .unwrap()
            .with_eta(C64::new(0.05, 0.0))
            .unwrap();
        let r0 = postselected_fisher_ratio(&s, 1e-6).unwrap().ratio;
        let d1 = postselected_fisher_ratio(&s, 1e-3).unwrap().ratio - r0;
        let d3 = postselected_fisher_ratio(&s, 3e-3).unwrap().ratio - r0;
        assert!(d1 > 0.0 && d3 > d1);
        assert!((d3 / d1 - 9.0).abs() < 0.5, "{}", d3 / d1);
    }

    #[test]
    fn total_qfi_grows_with_j() {
        let mut last = 0.0;
        for two_j in (2..=20).step_by(2) {
            let q = qfi_nonlinear_coherent(two_j, C64::new(0.1, 0.0))
                .unwrap()
                .exact;
            assert!(q > last);
            last = q;
        }
    }
}
