//! One function per subcommand, each turning a merged [`RunConfig`] into a [`Report`].

use rayon::prelude::*;
use serde_json::Value;
use wva_core::circuits::{
    measure_circuit, measure_circuit_analytic, measurement_weights, overlap_expansion_check,
    prep_circuit, ReferenceState, MAX_REGISTER_TWO_J,
};
use wva_core::dynamics::{
    conservation_residual, effective_model_fidelity, protocol_initial_state, EffectiveModel,
    TwoPhotonTCParams,
};
use wva_core::experiments::{
    fit_records, scaling_record, CircuitMode, RecordField, SweepConfig, SweepFamily,
    DEFAULT_BASELINE_THETA, DEFAULT_WEAK_VALUE_TARGET, MIN_FIT_POINTS,
};
use wva_core::fisher::{postselected_fisher_ratio, qfi_nonlinear_coherent};
use wva_core::linalg::DEFAULT_MAX_JOINT_DIM;
use wva_core::wva::{
    centered_quadrature, max_weak_value_bound, meter_readout, postselect, strategy_linear_fixed_ps,
    strategy_linear_optimal, strategy_near_deterministic, strategy_nonlinear_joint,
    strategy_nonlinear_joint_exact, strategy_uncorrelated, WeakValueStrategy, DEFAULT_COUPLING,
};
use wva_core::{HalfInt, C64};

use crate::config::{
    CircuitsName, CommandName, FamilyName, ModelName, RunConfig, StrategyName, ZetaName,
};
use crate::format::{opt, FitRow, Report, Table};
use crate::LabError;

pub const DEFAULT_TWO_J: u32 = 4;
pub const DEFAULT_KAPPA: f64 = 1e-3;
pub const DEFAULT_EPSILON: f64 = 0.04;
pub const DEFAULT_TARGET_PS: f64 = 0.01;
pub const DEFAULT_ETA: f64 = 0.1;
pub const DEFAULT_DYNAMICS_RATIO: f64 = 0.02;

fn config_error(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

fn finite(name: &str, x: f64) -> Result<f64, LabError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(config_error(format!("`{name}` must be finite")))
    }
}

fn eta_of(cfg: &RunConfig) -> Result<C64, LabError> {
    let eta = finite("eta", cfg.eta.unwrap_or(DEFAULT_ETA))?;
    if eta < 0.0 {
        return Err(config_error("`eta` must be non-negative"));
    }
    Ok(C64::new(eta, 0.0))
}

pub fn run_command(cfg: &RunConfig) -> Result<Report, LabError> {
    match cfg.command {
        Some(CommandName::WeakValue) => weak_value(cfg),
        Some(CommandName::Scaling) => scaling(cfg),
        Some(CommandName::CircuitPrep) => circuit_prep(cfg),
        Some(CommandName::CircuitMeasure) => circuit_measure(cfg),
        Some(CommandName::Fisher) => fisher(cfg),
        Some(CommandName::Dynamics) => dynamics(cfg),
        None => Err(config_error(
            "no command given (pass a subcommand or set `command` in the config file)",
        )),
    }
}

fn strategy_name(s: StrategyName) -> &'static str {
    match s {
        StrategyName::NonlinearJoint => "nonlinear-joint",
        StrategyName::NonlinearJointExact => "nonlinear-joint-exact",
        StrategyName::NearDeterministic => "near-deterministic",
        StrategyName::LinearOptimal => "linear-optimal",
        StrategyName::LinearFixedPs => "linear-fixed-ps",
        StrategyName::Uncorrelated => "uncorrelated",
    }
}

/// Builds the strategy and records its defining parameters.
fn build_strategy(cfg: &RunConfig, report: &mut Report) -> Result<WeakValueStrategy, LabError> {
    let name = cfg.strategy.unwrap_or_default();
    let two_j = cfg.two_j.unwrap_or(DEFAULT_TWO_J);
    let g = finite("g", cfg.g.unwrap_or(DEFAULT_COUPLING))?;
    let eta = eta_of(cfg)?;
    report.param("strategy", strategy_name(name));
    let s = match name {
        StrategyName::NonlinearJoint | StrategyName::NonlinearJointExact => {
            let kappa = finite("kappa", cfg.kappa.unwrap_or(DEFAULT_KAPPA))?;
            report.param("two_j", two_j).param("kappa", kappa);
            if name == StrategyName::NonlinearJoint {
                strategy_nonlinear_joint(two_j, kappa)?
            } else {
                strategy_nonlinear_joint_exact(two_j, kappa)?
            }
        }
        StrategyName::NearDeterministic => {
            let eps = finite("epsilon", cfg.epsilon.unwrap_or(DEFAULT_EPSILON))?;
            report.param("two_j", two_j).param("epsilon", eps);
            strategy_near_deterministic(two_j, eps)?
        }
        StrategyName::LinearOptimal => {
            let target = finite(
                "weak_value_target",
                cfg.weak_value_target.unwrap_or(DEFAULT_WEAK_VALUE_TARGET),
            )?;
            report
                .param("two_j", two_j)
                .param("weak_value_target", target);
            strategy_linear_optimal(two_j, target)?
        }
        StrategyName::LinearFixedPs => {
            let p = finite("target_ps", cfg.target_ps.unwrap_or(DEFAULT_TARGET_PS))?;
            report.param("two_j", two_j).param("target_ps", p);
            strategy_linear_fixed_ps(two_j, p)?
        }
        StrategyName::Uncorrelated => {
            let theta = finite("theta", cfg.theta.unwrap_or(DEFAULT_BASELINE_THETA))?;
            report.param("two_j", 1).param("theta", theta);
            strategy_uncorrelated(theta)?
        }
    };
    report.param("g", g).param("eta", eta.re);
    Ok(s.with_eta(eta)?.with_coupling(g))
}

fn weak_value(cfg: &RunConfig) -> Result<Report, LabError> {
    let mut report = Report::new("weak-value");
    let s = build_strategy(cfg, &mut report)?;
    let r = postselect(&s)?;
    let readout = meter_readout(&r, &centered_quadrature(&s)?, &s)?;
    let bound = max_weak_value_bound(s.psi_i(), s.observable(), r.success_prob_zeroth)?;
    report
        .put("weak_value_re", r.weak_value.re)
        .put("weak_value_im", r.weak_value.im)
        .put("abs_weak_value", r.weak_value.norm())
        .put("weak_value_bound", bound)
        .put("success_prob", r.success_prob_zeroth)
        .put("success_prob_exact", r.success_prob_exact)
        .put(
            "fidelity_exact_vs_firstorder",
            r.fidelity_exact_vs_firstorder,
        )
        .put("meter_shift_exact", readout.exact)
        .put("meter_shift_firstorder", readout.firstorder_formula)
        .put("meter_cutoff", s.meter().cutoff());
    Ok(report)
}

fn fisher(cfg: &RunConfig) -> Result<Report, LabError> {
    let mut report = Report::new("fisher");
    let s = build_strategy(cfg, &mut report)?;
    let f = postselected_fisher_ratio(&s, s.coupling())?;
    if !f.in_weak_regime() {
        eprintln!(
            "warning: |eta g A_w| = {} is outside the weak regime; the ratio prediction does not apply",
            crate::format::fmt_num(f.weak_regime_parameter)
        );
    }
    report
        .put("qfi_total", f.qfi_total)
        .put("qfi_postselected", f.qfi_postselected)
        .put("qfi_meter", f.qfi_meter)
        .put("success_prob", f.success_prob)
        .put("abs_weak_value", f.weak_value.norm())
        .put("ratio", f.ratio)
        .put("leading_order_ratio", f.leading_order_ratio)
        .put("small_eta_prediction", opt(f.small_eta_prediction))
        .put("weak_regime_parameter", f.weak_regime_parameter);
    let closed = if matches!(
        cfg.strategy.unwrap_or_default(),
        StrategyName::NonlinearJoint | StrategyName::NonlinearJointExact
    ) {
        Some(qfi_nonlinear_coherent(s.system().two_j(), s.eta())?)
    } else {
        None
    };
    report.put("qfi_closed_form", opt(closed.map(|q| q.exact)));
    Ok(report)
}

fn family_of(name: FamilyName) -> SweepFamily {
    match name {
        FamilyName::LinearFixedAw => SweepFamily::LinearFixedAw,
        FamilyName::LinearFixedSigma => SweepFamily::LinearFixedSigma,
        FamilyName::NonlinearJoint => SweepFamily::NonlinearJoint,
        FamilyName::NearDeterministic => SweepFamily::NearDeterministic,
        FamilyName::UncorrelatedBaseline => SweepFamily::UncorrelatedBaseline,
    }
}

pub const SCALING_COLUMNS: [&str; 9] = [
    "two_j",
    "parameter",
    "abs_weak_value",
    "success_prob",
    "sigma",
    "qfi_total",
    "fisher_ratio",
    "prep_prob",
    "measure_prob",
];

fn scaling(cfg: &RunConfig) -> Result<Report, LabError> {
    let family = family_of(cfg.family.unwrap_or_default());
    let (j_min, j_max, j_step) = (
        cfg.j_min.unwrap_or(2),
        cfg.j_max.unwrap_or(20),
        cfg.j_step.unwrap_or(2),
    );
    if j_min == 0 || j_step == 0 || j_min > j_max {
        return Err(config_error("need 0 < j_min <= j_max and j_step > 0"));
    }
    let parameter = match family {
        SweepFamily::LinearFixedAw => cfg.weak_value_target,
        SweepFamily::LinearFixedSigma => cfg.sigma_target,
        SweepFamily::NonlinearJoint => cfg.kappa,
        SweepFamily::NearDeterministic => cfg.epsilon,
        SweepFamily::UncorrelatedBaseline => cfg.theta,
    }
    .unwrap_or(family.default_parameter());
    let mut sweep = SweepConfig::new(family)
        .with_two_j(
            (j_min..=j_max)
                .step_by(j_step as usize)
                .map(|j| 2 * j)
                .collect(),
        )
        .with_parameter(finite("parameter", parameter)?);
    sweep.eta = eta_of(cfg)?;
    sweep.g = finite("g", cfg.g.unwrap_or(DEFAULT_COUPLING))?;
    sweep.baseline_theta = finite(
        "baseline_theta",
        cfg.baseline_theta.unwrap_or(DEFAULT_BASELINE_THETA),
    )?;
    sweep.circuits = match cfg.circuits.unwrap_or_default() {
        CircuitsName::Auto => CircuitMode::Auto,
        CircuitsName::Analytic => CircuitMode::Analytic,
        CircuitsName::Off => CircuitMode::Off,
    };
    sweep.validate()?;

    let records = sweep
        .two_j_values
        .par_iter()
        .map(|&two_j| scaling_record(&sweep, two_j))
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = Report::new("scaling");
    report
        .param("family", family.name())
        .param("parameter", sweep.parameter)
        .param("j_min", j_min)
        .param("j_max", j_max)
        .param("j_step", j_step)
        .param("g", sweep.g)
        .param("eta", sweep.eta.re)
        .param("baseline_theta", sweep.baseline_theta);
    let rows = records
        .iter()
        .map(|r| {
            vec![
                Value::from(r.two_j),
                r.kappa_or_epsilon.into(),
                r.abs_weak_value.into(),
                r.success_prob.into(),
                r.sigma.into(),
                r.qfi_total.into(),
                r.fisher_ratio.into(),
                opt(r.circuit_prep_prob),
                opt(r.circuit_measure_prob),
            ]
        })
        .collect();
    report.table = Some(Table {
        columns: SCALING_COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows,
    });
    if records.len() >= MIN_FIT_POINTS {
        for y in [
            RecordField::AbsWeakValue,
            RecordField::SuccessProb,
            RecordField::Sigma,
            RecordField::QfiTotal,
        ] {
            let fit = fit_records(&records, RecordField::J, y)?;
            report.fits.push(FitRow {
                x: RecordField::J.name().into(),
                y: y.name().into(),
                fit,
            });
        }
    }
    Ok(report)
}

fn zeta_name(z: ZetaName) -> &'static str {
    match z {
        ZetaName::PlusAll => "plus-all",
        ZetaName::Dicke => "dicke",
    }
}

fn reference(
    kind: ZetaName,
    two_j: u32,
    m1: HalfInt,
    m2: HalfInt,
) -> Result<ReferenceState, LabError> {
    Ok(match kind {
        ZetaName::PlusAll => ReferenceState::plus_all(two_j)?,
        ZetaName::Dicke => ReferenceState::dicke_superposition(two_j, m1, m2)?,
    })
}

fn circuit_prep(cfg: &RunConfig) -> Result<Report, LabError> {
    let two_j = cfg.two_j.unwrap_or(DEFAULT_TWO_J);
    if two_j > MAX_REGISTER_TWO_J {
        return Err(config_error(format!(
            "circuit-prep simulates at most 2j = {MAX_REGISTER_TWO_J}"
        )));
    }
    let j = HalfInt::from_twice(two_j as i32);
    let m1 = cfg.m1.map_or(
        if two_j.is_multiple_of(2) {
            HalfInt::ZERO
        } else {
            HalfInt::from_twice(1)
        },
        |m| m.0,
    );
    let m2 = cfg.m2.map_or(-j, |m| m.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (alpha, beta) = (
        finite("alpha", cfg.alpha.unwrap_or(h))?,
        finite("beta", cfg.beta.unwrap_or(h))?,
    );
    if ((alpha * alpha + beta * beta) - 1.0).abs() > 1e-10 {
        return Err(config_error("alpha^2 + beta^2 must equal 1"));
    }
    let zeta_kind = cfg.zeta.unwrap_or_default();
    let zeta = reference(zeta_kind, two_j, m1, m2)?;
    let out = prep_circuit(
        two_j,
        m1,
        m2,
        C64::new(alpha, 0.0),
        C64::new(beta, 0.0),
        &zeta,
    )?;

    let mut report = Report::new("circuit-prep");
    report
        .param("two_j", two_j)
        .param("m1", m1.to_string())
        .param("m2", m2.to_string())
        .param("alpha", alpha)
        .param("beta", beta)
        .param("zeta", zeta_name(zeta_kind));
    report
        .put("success_prob", out.success_prob)
        .put("formula_projective", out.formulas.projective)
        .put("formula_overlap_product", out.formulas.overlap_product)
        .put(
            "formula_unnormalized_dicke",
            opt(out.formulas.unnormalized_dicke),
        )
        .put("leakage", out.leakage);
    let space = wva_core::SpinSpace::new(two_j)?;
    let rows = out
        .output_system
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            vec![
                Value::from(space.m_at(k).to_string()),
                a.re.into(),
                a.im.into(),
            ]
        })
        .collect();
    report.table = Some(Table {
        columns: vec!["m".into(), "re".into(), "im".into()],
        rows,
    });
    Ok(report)
}

fn circuit_measure(cfg: &RunConfig) -> Result<Report, LabError> {
    let mut report = Report::new("circuit-measure");
    let strategy_cfg = RunConfig {
        strategy: Some(StrategyName::NonlinearJoint),
        ..cfg.clone()
    };
    let s = build_strategy(&strategy_cfg, &mut report)?;
    let two_j = s.system().two_j();
    let sup = s
        .two_component_support()
        .expect("joint strategy has two components");
    let zeta_kind = cfg.zeta.unwrap_or(ZetaName::Dicke);
    let zeta = reference(zeta_kind, two_j, sup.m1, sup.m2)?;
    report.param("zeta", zeta_name(zeta_kind));
    let (alpha, beta) = measurement_weights(sup.postselected.0, sup.postselected.1)?;
    let joint = s.evolved_joint(s.coupling())?;
    let meter_dim = s.meter().dim();
    let (c1, c2) = (zeta.dicke_overlap(sup.m1)?, zeta.dicke_overlap(sup.m2)?);
    let analytic = measure_circuit_analytic(
        two_j, &joint, meter_dim, sup.m1, sup.m2, alpha, beta, c1, c2,
    )?;
    let r = 1usize << two_j.min(MAX_REGISTER_TWO_J);
    let brute = if two_j <= MAX_REGISTER_TWO_J && 2 * r * r * meter_dim <= DEFAULT_MAX_JOINT_DIM {
        Some(measure_circuit(
            two_j, &joint, meter_dim, sup.m1, sup.m2, alpha, beta, &zeta,
        )?)
    } else {
        None
    };
    let post = postselect(&s)?;
    let used = brute.as_ref().unwrap_or(&analytic);
    let expansion = overlap_expansion_check(two_j, s.kind_parameter(), s.coupling(), s.eta())?;
    report
        .put(
            "mode",
            if brute.is_some() {
                "full-amplitude"
            } else {
                "analytic"
            },
        )
        .put("p_tilde", used.p_tilde)
        .put("p_tilde_analytic", analytic.p_tilde)
        .put("success_prob_exact", post.success_prob_exact)
        .put(
            "fidelity_vs_postselection",
            used.conditional_meter.fidelity(&post.kicked_meter_exact)?,
        )
        .put("expansion_weak_value", expansion.weak_value)
        .put("expansion_prefactor", expansion.prefactor)
        .put("expansion_relative_deviation", expansion.relative_deviation);
    Ok(report)
}

trait KindParameter {
    fn kind_parameter(&self) -> f64;
}

impl KindParameter for WeakValueStrategy {
    fn kind_parameter(&self) -> f64 {
        use wva_core::wva::StrategyKind::*;
        match self.kind() {
            NonlinearJoint { kappa } | NonlinearJointExact { kappa } => kappa,
            NearDeterministic { epsilon } => epsilon,
            LinearOptimal { weak_value_target } => weak_value_target,
            LinearFixedPs { target_ps } => target_ps,
            Uncorrelated { theta } => theta,
            Custom => f64::NAN,
        }
    }
}

fn model_of(m: ModelName) -> (EffectiveModel, &'static str) {
    match m {
        ModelName::Dispersive => (EffectiveModel::Dispersive, "dispersive"),
        ModelName::NegativeSign => (EffectiveModel::DispersiveNegativeSign, "negative-sign"),
        ModelName::Commutator => (EffectiveModel::SecondOrderCommutator, "commutator"),
    }
}

fn dynamics(cfg: &RunConfig) -> Result<Report, LabError> {
    let two_j = cfg.two_j.unwrap_or(2);
    let delta = finite("delta_minus", cfg.delta_minus.unwrap_or(1.0))?;
    let g0 = match cfg.g0 {
        Some(g0) => finite("g0", g0)?,
        None => TwoPhotonTCParams::for_ratio(two_j, DEFAULT_DYNAMICS_RATIO, delta, 2)?.g0(),
    };
    let cutoff = cfg.fock_cutoff.unwrap_or(6);
    let eta = eta_of(cfg)?;
    let (model, model_name) = model_of(cfg.model.unwrap_or_default());
    let mut params = TwoPhotonTCParams::with_default_times(two_j, g0, delta, cutoff)?;
    if let Some(t) = cfg.t_final {
        params = params.with_t_final(finite("t_final", t)?)?;
    } else if params.t_final() == 0.0 {
        return Err(config_error("`t_final` is required when g0 = 0"));
    }
    if let Some(dt) = cfg.dt {
        params = params.with_dt(finite("dt", dt)?)?;
    }
    if let Some(n) = cfg.samples {
        params = params.with_samples(n);
    }
    let (t_final, dt) = (params.t_final(), params.dt());
    let psi0 = protocol_initial_state(&params, eta)?;
    let f = effective_model_fidelity(&params, model, &psi0)?;
    let residual = conservation_residual(&params, &[0.0, f.time_of_min, t_final])?;

    let mut report = Report::new("dynamics");
    report
        .param("two_j", two_j)
        .param("g0", g0)
        .param("delta_minus", delta)
        .param("t_final", t_final)
        .param("dt", dt)
        .param("fock_cutoff", cutoff)
        .param("eta", eta.re)
        .param("model", model_name);
    report
        .put("min_fidelity", f.min_fidelity)
        .put("time_of_min", f.time_of_min)
        .put("final_fidelity", f.final_fidelity)
        .put("norm_drift", f.norm_drift)
        .put("conservation_residual", residual)
        .put("effective_coupling", params.effective_coupling())
        .put(
            "effective_coupling_negative_sign",
            params.effective_coupling_negative_sign(),
        );
    let rows = f
        .times
        .iter()
        .zip(&f.fidelities)
        .map(|(t, x)| vec![Value::from(*t), Value::from(*x)])
        .collect();
    report.table = Some(Table {
        columns: vec!["time".into(), "fidelity".into()],
        rows,
    });
    Ok(report)
}
