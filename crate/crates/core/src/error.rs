use crate::linalg::C64;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("joint dimension {dim} exceeds the configured maximum {limit}")]
    DimensionOverflow { dim: usize, limit: usize },
    #[error("empty vector or matrix")]
    Empty,
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("operator is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("null postselection: overlap {overlap} underflows")]
    NullPostselection { overlap: C64 },
    #[error(
        "undefined weak value: pre- and postselected states are orthogonal (overlap {overlap})"
    )]
    UndefinedWeakValue { overlap: C64 },
    #[error("m = {two_m}/2 is not a valid projection for j = {two_j}/2")]
    ProjectionOutOfRange { two_m: i32, two_j: u32 },
    #[error("nonlinear strategy requires integer j (2j = {two_j} is odd)")]
    RequiresIntegerSpin { two_j: u32 },
    #[error(
        "Fock cutoff {cutoff} leaves tail weight {tail:e}; use a cutoff of at least {suggested}"
    )]
    CutoffTooSmall {
        cutoff: usize,
        tail: f64,
        suggested: usize,
    },
    #[error("observable has zero variance on the initial state")]
    ZeroVariance,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("register of 2j = {two_j} qubits exceeds the full-amplitude budget")]
    RegisterTooLarge { two_j: u32 },
    #[error("reference state has zero overlap with a Dicke component")]
    ZeroReferenceOverlap,
    #[error("norm drift {drift:e} exceeds tolerance; reduce the time step")]
    NormDrift { drift: f64 },
    #[error("log-log fit needs strictly positive values")]
    NonPositiveValue,
    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}
