use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Hilbert-space dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("negative argument: {0}")]
    NegativeArg(&'static str),
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("operation requires at least one atom")]
    NoAtoms,
    #[error("space has {found} atoms, expected {expected}")]
    AtomCountMismatch { expected: usize, found: usize },
    #[error("Fock truncation too small: Poisson tail mass {tail:e} beyond n_max = {n_max}")]
    Truncation { tail: f64, n_max: usize },
    #[error("operator is not Hermitian (‖H − H†‖ = {0:e})")]
    NotHermitian(f64),
    #[error("operands live on different Hilbert spaces")]
    SpaceMismatch,
    #[error("time step {dt:e} exceeds the stability bound {limit:e}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("norm drift {0:e} exceeds tolerance")]
    NormDrift(f64),
    #[error("r = {r} and s = {s} are not coprime")]
    NotCoprime { r: u64, s: u64 },
    #[error("detuning must be non-zero")]
    ZeroDetuning,
    #[error("Rabi frequency must be positive for the nonlinear coupling")]
    ZeroDrive,
    #[error("grid has no interior points")]
    EmptyGrid,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
