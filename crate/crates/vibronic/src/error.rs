use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building bases, validating states, or
/// propagating them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("n_spins must be at least 1")]
    EmptySpinSector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("spin projection 2M = {two_m} invalid for 2J = {two_j}")]
    SpinProjectionOutOfRange { two_m: i64, two_j: i64 },

    #[error("Fock index {n} exceeds cutoff {n_max}")]
    FockIndexOutOfRange { n: usize, n_max: usize },

    #[error("state norm {norm} deviates from 1 beyond tolerance")]
    NotNormalized { norm: f64 },

    #[error("operator marked Hermitian has defect {defect:.3e}")]
    NotHermitian { defect: f64 },

    #[error("density operator trace {trace} deviates from 1 beyond tolerance")]
    NotUnitTrace { trace: f64 },

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("sample times must start at 0 and be strictly increasing")]
    BadSampleTimes,

    #[error("adaptive step underflow at t = {t} (dt = {dt:.3e}); tolerances unreachable")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("positivity violated at t = {t}: min eigenvalue {min_eig:.3e}")]
    PositivityViolation { t: f64, min_eig: f64 },

    #[error("Fock cutoff {n_max} too small for nbar = {nbar} (discarded weight {weight:.3e})")]
    CutoffTooSmall { n_max: usize, nbar: f64, weight: f64 },

    #[error("three-mode product dimension {dim} exceeds cap {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },

    #[error("coherent state |alpha|^2 = {n_mean} unconverged at cutoff {n_max} (tail {weight:.3e})")]
    CoherentTailTooLarge { n_mean: f64, n_max: usize, weight: f64 },

    #[error("Wigner grid too coarse: max |alpha|^2 = {max_alpha_sq:.3} < Fock cutoff {n_max}")]
    GridTooCoarse { max_alpha_sq: f64, n_max: usize },

    #[error("coherence window not found: no grid point exceeds the threshold")]
    WindowNotFound,

    #[error("unknown operator kind `{0}`")]
    UnknownOpKind(String),

    #[error("invalid smearing weights: {reason}")]
    InvalidSmearing { reason: &'static str },
}
