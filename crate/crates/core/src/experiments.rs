//! Scaling sweeps over `j` and log-log exponent fits.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::boson::DEFAULT_ETA;
use crate::circuits::{
    measure_circuit, measure_circuit_analytic, measurement_weights, prep_circuit, prep_formulas,
    ReferenceState, MAX_REGISTER_TWO_J,
};
use crate::fisher::{postselected_fisher_ratio, qfi_joint};
use crate::linalg::C64;
use crate::wva::{
    collective_success, sigma_advantage, strategy_linear_fixed_ps, strategy_linear_optimal,
    strategy_near_deterministic, strategy_nonlinear_joint, strategy_uncorrelated,
    WeakValueStrategy, DEFAULT_COUPLING,
};
use crate::{Error, Result};

/// Default per-probe reference angle for the uncorrelated baseline.
pub const DEFAULT_BASELINE_THETA: f64 = 0.05;
/// Default target weak value for the fixed-`A_w` linear family.
pub const DEFAULT_WEAK_VALUE_TARGET: f64 = 1000.0;
/// Fits need at least this many points.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SweepFamily {
    /// GHZ-like state, `A = Jz`, weak value held at `parameter`.
    /// Baseline: the `j = 1/2` strategy at the same weak value.
    LinearFixedAw,
    /// GHZ-like state, `A = Jz`, `P_s = parameter * 2j * sin^2(theta_0)` so that
    /// `sigma` stays at `parameter`.
    LinearFixedSigma,
    /// Closed-form joint strategy, `parameter = kappa`.
    NonlinearJoint,
    /// `parameter = epsilon`.
    NearDeterministic,
    /// `2j` independent qubits, `parameter = theta`.
    UncorrelatedBaseline,
}

impl SweepFamily {
    pub const ALL: [SweepFamily; 5] = [
        SweepFamily::LinearFixedAw,
        SweepFamily::LinearFixedSigma,
        SweepFamily::NonlinearJoint,
        SweepFamily::NearDeterministic,
        SweepFamily::UncorrelatedBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepFamily::LinearFixedAw => "linear_fixed_Aw",
            SweepFamily::LinearFixedSigma => "linear_fixed_sigma",
            SweepFamily::NonlinearJoint => "nonlinear_joint",
            SweepFamily::NearDeterministic => "near_deterministic",
            SweepFamily::UncorrelatedBaseline => "uncorrelated_baseline",
        }
    }

    /// Default `parameter` for the family.
    pub fn default_parameter(self) -> f64 {
        match self {
            SweepFamily::LinearFixedAw => DEFAULT_WEAK_VALUE_TARGET,
            SweepFamily::LinearFixedSigma => 1.0,
            SweepFamily::NonlinearJoint => 1e-4,
            SweepFamily::NearDeterministic => 0.04,
            SweepFamily::UncorrelatedBaseline => DEFAULT_BASELINE_THETA,
        }
    }

    /// Whether the family needs integer `j`.
    pub fn requires_integer_j(self) -> bool {
        matches!(
            self,
            SweepFamily::NonlinearJoint | SweepFamily::NearDeterministic
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CircuitMode {
    /// Full-amplitude simulation where the registers fit, closed forms elsewhere.
    #[default]
    Auto,
    Analytic,
    /// No circuit columns.
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub family: SweepFamily,
    /// Strictly increasing values of `2j`.
    pub two_j_values: Vec<u32>,
    pub parameter: f64,
    pub eta: C64,
    pub g: f64,
    pub baseline_theta: f64,
    pub circuits: CircuitMode,
}

impl SweepConfig {
    /// Defaults: `eta = 0.1`, `g = 1e-4`, `theta_0 = 0.05`, `j = 2, 4, ..., 20`.
    pub fn new(family: SweepFamily) -> Self {
        Self {
            family,
            two_j_values: (2..=20).step_by(2).map(|j| 2 * j).collect(),
            parameter: family.default_parameter(),
            eta: DEFAULT_ETA,
            g: DEFAULT_COUPLING,
            baseline_theta: DEFAULT_BASELINE_THETA,
            circuits: CircuitMode::Auto,
        }
    }

    pub fn with_two_j(mut self, values: Vec<u32>) -> Self {
        self.two_j_values = values;
        self
    }

    /// `2j` for every integer `j` in `[j_min, j_max]`.
    pub fn with_j_range(self, j_min: u32, j_max: u32) -> Self {
        self.with_two_j((j_min..=j_max).map(|j| 2 * j).collect())
    }

    pub fn with_parameter(mut self, parameter: f64) -> Self {
        self.parameter = parameter;
        self
    }

    pub fn with_circuits_off(mut self) -> Self {
        self.circuits = CircuitMode::Off;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.two_j_values.is_empty() {
            return Err(Error::Empty);
        }
        if self.two_j_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter {
                name: "two_j_values",
                reason: "must be strictly increasing",
            });
        }
        if self.two_j_values[0] == 0 {
            return Err(Error::InvalidParameter {
                name: "two_j_values",
                reason: "2j must be positive",
            });
        }
        if self.family.requires_integer_j() {
            if let Some(&two_j) = self.two_j_values.iter().find(|v| *v % 2 == 1) {
                return Err(Error::RequiresIntegerSpin { two_j });
            }
        }
        if !self.parameter.is_finite() || !self.g.is_finite() {
            return Err(Error::InvalidParameter {
                name: "parameter",
                reason: "must be finite",
            });
        }
        if !(self.baseline_theta > 0.0 && self.baseline_theta <= core::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter {
                name: "baseline_theta",
                reason: "must lie in (0, pi/2]",
            });
        }
        Ok(())
    }

    fn baseline_ps(&self) -> f64 {
        self.baseline_theta.sin().powi(2)
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingRecord {
    pub two_j: u32,
    pub kappa_or_epsilon: f64,
    pub abs_weak_value: f64,
    pub success_prob: f64,
    pub sigma: f64,
    pub qfi_total: f64,
    pub fisher_ratio: f64,
    pub circuit_prep_prob: Option<f64>,
    pub circuit_measure_prob: Option<f64>,
}

impl ScalingRecord {
    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }
}

fn build_strategy(config: &SweepConfig, two_j: u32) -> Result<WeakValueStrategy> {
    let p = config.parameter;
    let s = match config.family {
        SweepFamily::LinearFixedAw => strategy_linear_optimal(two_j, p)?,
        SweepFamily::LinearFixedSigma => {
            let target = p * two_j as f64 * config.baseline_ps();
            strategy_linear_fixed_ps(two_j, target)?
        }
        SweepFamily::NonlinearJoint => strategy_nonlinear_joint(two_j, p)?,
        SweepFamily::NearDeterministic => strategy_near_deterministic(two_j, p)?,
        SweepFamily::UncorrelatedBaseline => strategy_uncorrelated(p)?,
    };
    Ok(s.with_eta(config.eta)?.with_coupling(config.g))
}

fn circuit_columns(
    strategy: &WeakValueStrategy,
    mode: CircuitMode,
) -> Result<(Option<f64>, Option<f64>)> {
    if mode == CircuitMode::Off {
        return Ok((None, None));
    }
    let Some(sup) = strategy.two_component_support() else {
        return Ok((None, None));
    };
    let two_j = strategy.system().two_j();
    let brute = mode == CircuitMode::Auto && two_j <= MAX_REGISTER_TWO_J;

    let plus = ReferenceState::plus_all(two_j)?;
    let (a, b) = sup.initial;
    let prep = if brute {
        prep_circuit(two_j, sup.m1, sup.m2, a, b, &plus)?.success_prob
    } else {
        prep_formulas(&plus, sup.m1, sup.m2)?.projective
    };

    let zeta = ReferenceState::dicke_superposition(two_j, sup.m1, sup.m2)?;
    let (alpha, beta) = measurement_weights(sup.postselected.0, sup.postselected.1)?;
    let joint = strategy.evolved_joint(strategy.coupling())?;
    let meter_dim = strategy.meter().dim();
    let fits = brute && {
        let r = 1usize << two_j;
        2 * r * r * meter_dim <= crate::linalg::DEFAULT_MAX_JOINT_DIM
    };
    let measure = if fits {
        measure_circuit(two_j, &joint, meter_dim, sup.m1, sup.m2, alpha, beta, &zeta)?.p_tilde
    } else {
        let (c1, c2) = (zeta.dicke_overlap(sup.m1)?, zeta.dicke_overlap(sup.m2)?);
        measure_circuit_analytic(
            two_j, &joint, meter_dim, sup.m1, sup.m2, alpha, beta, c1, c2,
        )?
        .p_tilde
    };
    Ok((Some(prep), Some(measure)))
}

/// Computes the record for one `2j`.
pub fn scaling_record(config: &SweepConfig, two_j: u32) -> Result<ScalingRecord> {
    if config.family.requires_integer_j() && two_j % 2 == 1 {
        return Err(Error::RequiresIntegerSpin { two_j });
    }
    let strategy = build_strategy(config, two_j)?;
    let abs_weak_value = strategy.weak_value()?.norm();
    let fisher = postselected_fisher_ratio(&strategy, config.g)?;
    let single_qfi = qfi_joint(&strategy)?;

    let (success_prob, sigma, qfi_total) = match config.family {
        SweepFamily::UncorrelatedBaseline => {
            let c = collective_success(strategy.success_probability(), two_j)?;
            let sigma = sigma_advantage(c.exact, two_j, strategy.success_probability())?;
            (c.exact, sigma, two_j as f64 * single_qfi)
        }
        SweepFamily::LinearFixedAw => {
            let a = config.parameter;
            let baseline = 0.25 / (0.25 + a * a);
            let p = strategy.success_probability();
            (p, sigma_advantage(p, two_j, baseline)?, single_qfi)
        }
        _ => {
            let p = strategy.success_probability();
            (
                p,
                sigma_advantage(p, two_j, config.baseline_ps())?,
                single_qfi,
            )
        }
    };
    let (circuit_prep_prob, circuit_measure_prob) = circuit_columns(&strategy, config.circuits)?;
    Ok(ScalingRecord {
        two_j,
        kappa_or_epsilon: config.parameter,
        abs_weak_value,
        success_prob,
        sigma,
        qfi_total,
        fisher_ratio: fisher.ratio,
        circuit_prep_prob,
        circuit_measure_prob,
    })
}

/// One record per `2j`, in the order given (which [`SweepConfig::validate`] requires to be increasing).
pub fn sweep(config: &SweepConfig) -> Result<Vec<ScalingRecord>> {
    config.validate()?;
    config
        .two_j_values
        .iter()
        .map(|&two_j| scaling_record(config, two_j))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Least squares of `ln y` on `ln x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveValue);
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter {
            name: "x",
            reason: "needs at least two distinct values",
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        points_used: xs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RecordField {
    J,
    AbsWeakValue,
    SuccessProb,
    Sigma,
    QfiTotal,
    FisherRatio,
}

impl RecordField {
    pub fn get(self, r: &ScalingRecord) -> f64 {
        match self {
            RecordField::J => r.j(),
            RecordField::AbsWeakValue => r.abs_weak_value,
            RecordField::SuccessProb => r.success_prob,
            RecordField::Sigma => r.sigma,
            RecordField::QfiTotal => r.qfi_total,
            RecordField::FisherRatio => r.fisher_ratio,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RecordField::J => "j",
            RecordField::AbsWeakValue => "abs_weak_value",
            RecordField::SuccessProb => "success_prob",
            RecordField::Sigma => "sigma",
            RecordField::QfiTotal => "qfi_total",
            RecordField::FisherRatio => "fisher_ratio",
        }
    }
}

pub fn fit_records(records: &[ScalingRecord], x: RecordField, y: RecordField) -> Result<FitResult> {
    let xs: Vec<f64> = records.iter().map(|r| x.get(r)).collect();
    let ys: Vec<f64> = records.iter().map(|r| y.get(r)).collect();
    fit_loglog(&xs, &ys)
}
