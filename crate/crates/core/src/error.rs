use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("baker map requires N divisible by three, got N = {0}")]
    NotDivisibleByThree(usize),
    #[error(
        "{map} map requires boundary phases chi_q = chi_p = {expected}, got ({chi_q}, {chi_p})"
    )]
    WrongBoundaryPhase {
        map: &'static str,
        expected: f64,
        chi_q: f64,
        chi_p: f64,
    },
    #[error("propagator already carries an opening")]
    AlreadyOpen,
    #[error("orbit {label} is inconsistent with the map at step {step}")]
    InconsistentOrbit { label: String, step: usize },
    #[error("no surviving boxes at depth {depth}")]
    InsufficientSamples { depth: u32 },
    #[error("mode index k = {k} out of range for period {period}")]
    BadModeIndex { k: usize, period: usize },
    #[error("scar pair for orbit {label}, k = {k} has vanishing left/right overlap")]
    DegeneratePair { label: String, k: usize },
    #[error("only {available} modes available with L_max = {l_max}, {required} requested; increase L_max")]
    InsufficientOrbits {
        available: usize,
        required: usize,
        l_max: usize,
    },
    #[error("eigenvalue cluster is numerically defective at indices {0:?}")]
    DefectiveMatrix(Vec<usize>),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    SpecMismatch { expected: usize, actual: usize },
    #[error("all singular values of the overlap matrix fall below the truncation threshold")]
    RankZero,
    #[error("state vector is zero")]
    ZeroState,
    #[error("pair is not biorthonormal: |<L|R> - 1| = {0:e}")]
    NotBiorthonormal(f64),
    #[error("a power-law fit needs at least three distinct sizes, got {0}")]
    TooFewSizes(usize),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}
