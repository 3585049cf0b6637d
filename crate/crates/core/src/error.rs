use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("root system {kind} requires rank >= {min}, got {rank}")]
    InvalidRank {
        kind: &'static str,
        rank: usize,
        min: usize,
    },

    #[error("invalid multiplicity: {0}")]
    InvalidMultiplicity(String),

    #[error("reflection along the zero vector is undefined")]
    ZeroRoot,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Weyl group enumeration is limited to rank <= {max}, got {rank}")]
    GroupTooLarge { rank: usize, max: usize },

    #[error("series did not converge within {terms} terms (argument {z})")]
    SeriesDiverged { terms: usize, z: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error estimate {error}")]
    QuadratureNonConvergence { estimate: f64, error: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("point lies on the wall of root {root} (<alpha,x> = 0)")]
    BoundaryContact { root: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("at least {min} samples required, got {got}")]
    InsufficientSamples { min: usize, got: usize },

    #[error("Jacobi eigenvalue iteration did not converge after {sweeps} sweeps")]
    JacobiNonConvergence { sweeps: usize },

    #[error("rejection envelope violated at y = {y} (log ratio excess {excess})")]
    EnvelopeViolation { y: f64, excess: f64 },

    #[error("rejection acceptance rate {rate} below floor {floor}")]
    LowAcceptance { rate: f64, floor: f64 },

    #[error("non-finite state at step {step} of path {path}")]
    NanState { step: usize, path: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
