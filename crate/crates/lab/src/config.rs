//! Run configuration: a flat JSON file overlaid by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use wva_core::HalfInt;

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    WeakValue,
    Scaling,
    CircuitPrep,
    CircuitMeasure,
    Fisher,
    Dynamics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    #[default]
    NonlinearJoint,
    NonlinearJointExact,
    NearDeterministic,
    LinearOptimal,
    LinearFixedPs,
    Uncorrelated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    #[value(name = "linear-fixed-aw")]
    #[serde(rename = "linear-fixed-aw")]
    LinearFixedAw,
    LinearFixedSigma,
    #[default]
    NonlinearJoint,
    NearDeterministic,
    UncorrelatedBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CircuitsName {
    #[default]
    Auto,
    Analytic,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ZetaName {
    #[default]
    PlusAll,
    Dicke,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    #[default]
    Dispersive,
    NegativeSign,
    Commutator,
}

/// A spin projection written as `-2`, `1.5` or `-3/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinValue(pub HalfInt);

impl FromStr for SpinValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let parsed = match s.split_once('/') {
            Some((num, "2")) => num.trim().parse::<i32>().ok().map(HalfInt::from_twice),
            Some(_) => None,
            None => s.parse::<f64>().ok().and_then(HalfInt::from_f64),
        };
        parsed
            .map(SpinValue)
            .ok_or_else(|| format!("`{s}` is not an integer or half-integer"))
    }
}

impl fmt::Display for SpinValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl<'de> Deserialize<'de> for SpinValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Num(x) => x.to_string(),
            Raw::Text(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Every setting any command reads. Unset fields fall back to per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandName>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,

    pub strategy: Option<StrategyName>,
    pub family: Option<FamilyName>,
    pub two_j: Option<u32>,
    pub kappa: Option<f64>,
    pub epsilon: Option<f64>,
    pub theta: Option<f64>,
    pub weak_value_target: Option<f64>,
    pub target_ps: Option<f64>,
    pub sigma_target: Option<f64>,
    pub g: Option<f64>,
    pub eta: Option<f64>,

    pub j_min: Option<u32>,
    pub j_max: Option<u32>,
    pub j_step: Option<u32>,
    pub baseline_theta: Option<f64>,
    pub circuits: Option<CircuitsName>,

    pub m1: Option<SpinValue>,
    pub m2: Option<SpinValue>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub zeta: Option<ZetaName>,

    pub g0: Option<f64>,
    pub delta_minus: Option<f64>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub fock_cutoff: Option<usize>,
    pub model: Option<ModelName>,
    pub samples: Option<usize>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            LabError::Config(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| LabError::Config(format!("config `{}`: {e}", path.display())))
    }

    /// Fields set in `top` win over `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay_fields!(base, top;
            command, format, output, strategy, family, two_j, kappa, epsilon, theta,
            weak_value_target, target_ps, sigma_target, g, eta, j_min, j_max, j_step,
            baseline_theta, circuits, m1, m2, alpha, beta, zeta, g0, delta_minus,
            t_final, dt, fock_cutoff, model, samples,
        )
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "wva-lab",
    version,
    about = "Collective weak-value amplification simulations"
)]
pub struct Cli {
    /// Flat JSON file with any of the flag names (snake_case) as keys; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output format [default: json].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weak value, success probability and exact vs first-order postselection.
    WeakValue(WeakValueArgs),
    /// Sweep over j with log-log fits.
    Scaling(ScalingArgs),
    /// Full-amplitude state-preparation circuit.
    CircuitPrep(CircuitPrepArgs),
    /// Measurement circuit on the kicked joint state of the closed-form joint strategy.
    CircuitMeasure(CircuitMeasureArgs),
    /// Fisher information before and after postselection.
    Fisher(FisherArgs),
    /// Two-photon Tavis-Cummings evolution against an effective model.
    Dynamics(DynamicsArgs),
}

#[derive(Debug, Args, Default)]
pub struct StrategyArgs {
    /// Strategy preset [default: nonlinear-joint].
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyName>,
    /// Twice the spin, 2j [default: 4].
    #[arg(long)]
    pub two_j: Option<u32>,
    /// Joint-strategy kappa [default: 0.001].
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Near-deterministic epsilon [default: 0.04].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Qubit postselection angle [default: 0.05].
    #[arg(long)]
    pub theta: Option<f64>,
    /// Weak value of the linear-optimal preset [default: 1000].
    #[arg(long)]
    pub weak_value_target: Option<f64>,
    /// Success probability of the linear-fixed-ps preset [default: 0.01].
    #[arg(long)]
    pub target_ps: Option<f64>,
    /// Coupling strength [default: 1e-4].
    #[arg(long)]
    pub g: Option<f64>,
    /// Coherent meter amplitude [default: 0.1].
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct WeakValueArgs {
    #[command(flatten)]
    pub strategy: StrategyArgs,
}

#[derive(Debug, Args, Default)]
pub struct FisherArgs {
    #[command(flatten)]
    pub strategy: StrategyArgs,
}

#[derive(Debug, Args, Default)]
pub struct ScalingArgs {
    /// Sweep family [default: nonlinear-joint].
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    /// Smallest j [default: 2].
    #[arg(long)]
    pub j_min: Option<u32>,
    /// Largest j [default: 20].
    #[arg(long)]
    pub j_max: Option<u32>,
    /// Step in j [default: 2].
    #[arg(long)]
    pub j_step: Option<u32>,
    /// Parameter of the nonlinear-joint family [default: 1e-4].
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Parameter of the near-deterministic family [default: 0.04].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Parameter of the uncorrelated-baseline family [default: 0.05].
    #[arg(long)]
    pub theta: Option<f64>,
    /// Parameter of the linear-fixed-aw family [default: 1000].
    #[arg(long)]
    pub weak_value_target: Option<f64>,
    /// Parameter of the linear-fixed-sigma family [default: 1].
    #[arg(long)]
    pub sigma_target: Option<f64>,
    /// Per-probe qubit angle for the sigma baseline [default: 0.05].
    #[arg(long)]
    pub baseline_theta: Option<f64>,
    /// Circuit columns [default: auto].
    #[arg(long, value_enum)]
    pub circuits: Option<CircuitsName>,
    /// Coupling strength [default: 1e-4].
    #[arg(long)]
    pub g: Option<f64>,
    /// Coherent meter amplitude [default: 0.1].
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct CircuitPrepArgs {
    /// Twice the spin, 2j [default: 4].
    #[arg(long)]
    pub two_j: Option<u32>,
    /// First Dicke component, e.g. 0 or -3/2 [default: 0, or 1/2 for half-integer j].
    #[arg(long, allow_hyphen_values = true)]
    pub m1: Option<SpinValue>,
    /// Second Dicke component [default: -j].
    #[arg(long, allow_hyphen_values = true)]
    pub m2: Option<SpinValue>,
    /// Real weight of |j,m1> [default: 1/sqrt2].
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Real weight of |j,m2> [default: 1/sqrt2].
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Reference state fed to the second register [default: plus-all].
    #[arg(long, value_enum)]
    pub zeta: Option<ZetaName>,
}

#[derive(Debug, Args, Default)]
pub struct CircuitMeasureArgs {
    /// Twice the spin, 2j [default: 4].
    #[arg(long)]
    pub two_j: Option<u32>,
    /// Joint-strategy kappa [default: 0.001].
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Coupling strength [default: 1e-4].
    #[arg(long)]
    pub g: Option<f64>,
    /// Coherent meter amplitude [default: 0.1].
    #[arg(long)]
    pub eta: Option<f64>,
    /// Reference state fed to the second register [default: dicke].
    #[arg(long, value_enum)]
    pub zeta: Option<ZetaName>,
}

#[derive(Debug, Args, Default)]
pub struct DynamicsArgs {
    /// Twice the spin, 2j [default: 2].
    #[arg(long)]
    pub two_j: Option<u32>,
    /// Two-photon coupling [default: 0.02 * delta_minus].
    #[arg(long, allow_hyphen_values = true)]
    pub g0: Option<f64>,
    /// Detuning [default: 1].
    #[arg(long, allow_hyphen_values = true)]
    pub delta_minus: Option<f64>,
    /// Evolution time [default: one effective period 2 pi / |4 g0^2 / delta_minus|].
    #[arg(long)]
    pub t_final: Option<f64>,
    /// RK4 step [default: 0.05 / |delta_minus|].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Highest Fock level kept [default: 6].
    #[arg(long)]
    pub fock_cutoff: Option<usize>,
    /// Coherent meter amplitude [default: 0.1].
    #[arg(long)]
    pub eta: Option<f64>,
    /// Effective model compared against [default: dispersive].
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// Number of stored trajectory samples [default: 200].
    #[arg(long)]
    pub samples: Option<usize>,
}

impl StrategyArgs {
    fn into_config(self, base: RunConfig) -> RunConfig {
        RunConfig {
            strategy: self.strategy,
            two_j: self.two_j,
            kappa: self.kappa,
            epsilon: self.epsilon,
            theta: self.theta,
            weak_value_target: self.weak_value_target,
            target_ps: self.target_ps,
            g: self.g,
            eta: self.eta,
            ..base
        }
    }
}

impl Command {
    /// The flags of this subcommand as a partial configuration.
    pub fn into_config(self) -> RunConfig {
        match self {
            Command::WeakValue(a) => a.strategy.into_config(RunConfig {
                command: Some(CommandName::WeakValue),
                ..Default::default()
            }),
            Command::Fisher(a) => a.strategy.into_config(RunConfig {
                command: Some(CommandName::Fisher),
                ..Default::default()
            }),
            Command::Scaling(a) => RunConfig {
                command: Some(CommandName::Scaling),
                family: a.family,
                j_min: a.j_min,
                j_max: a.j_max,
                j_step: a.j_step,
                kappa: a.kappa,
                epsilon: a.epsilon,
                theta: a.theta,
                weak_value_target: a.weak_value_target,
                sigma_target: a.sigma_target,
                baseline_theta: a.baseline_theta,
                circuits: a.circuits,
                g: a.g,
                eta: a.eta,
                ..Default::default()
            },
            Command::CircuitPrep(a) => RunConfig {
                command: Some(CommandName::CircuitPrep),
                two_j: a.two_j,
                m1: a.m1,
                m2: a.m2,
                alpha: a.alpha,
                beta: a.beta,
                zeta: a.zeta,
                ..Default::default()
            },
            Command::CircuitMeasure(a) => RunConfig {
                command: Some(CommandName::CircuitMeasure),
                two_j: a.two_j,
                kappa: a.kappa,
                g: a.g,
                eta: a.eta,
                zeta: a.zeta,
                ..Default::default()
            },
            Command::Dynamics(a) => RunConfig {
                command: Some(CommandName::Dynamics),
                two_j: a.two_j,
                g0: a.g0,
                delta_minus: a.delta_minus,
                t_final: a.t_final,
                dt: a.dt,
                fock_cutoff: a.fock_cutoff,
                eta: a.eta,
                model: a.model,
                samples: a.samples,
                ..Default::default()
            },
        }
    }
}
