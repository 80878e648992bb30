//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is numerically singular (|det| = {det:e} below threshold {threshold:e})")]
    SingularMatrix { det: f64, threshold: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("elements belong to different twisted algebras")]
    AlgebraMismatch,
    #[error("matrix shapes not conformable: {0}")]
    ShapeMismatch(String),
    #[error("box radius {0} too small")]
    BoxTooSmall(usize),
    #[error("no convergence within box radius {max_radius} (last delta {last_delta:e}, tol {tol:e})")]
    NoConvergence {
        max_radius: usize,
        last_delta: f64,
        tol: f64,
    },
    #[error("element is not certified positive (lower spectral estimate {lower:e})")]
    NotPositive { lower: f64 },
    #[error("element is not self-adjoint (deviation {0:e})")]
    NotSelfAdjoint(f64),
    #[error("quadrature under-resolved: error estimate {estimate:e} exceeds tol {tol:e}")]
    QuadratureUnderResolved { estimate: f64, tol: f64 },
    #[error("sampled functions live on different grids")]
    GridMismatch,
    #[error("coefficient tail cannot be certified below {0:e}")]
    DecayNotCertified(f64),
    #[error("module vectors have different base windows")]
    BaseMismatch,
    #[error("system is not a certified frame: {0}")]
    NotAFrame(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Parse(_) | Error::SingularMatrix { .. } => 2,
            Error::NotAFrame(_) => 4,
            _ => 3,
        }
    }
}
