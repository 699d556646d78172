use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("potential has a nonzero mean coefficient q(0) = {0}")]
    ZeroMeanViolation(String),
    #[error("potential marked real but q({m}) is not the conjugate of q({neg})", neg = -m)]
    ConjugacyViolation { m: i64 },
    #[error("mode {m} has the wrong parity for this basis")]
    ParityError { m: i64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("weight construction hypothesis fails: {0}")]
    HypothesisViolation(String),
    #[error("cutoff K = {k} is too small (need at least {min})")]
    CutoffTooSmall { k: usize, min: usize },
    #[error("an eigenvalue sits on the disc boundary after {attempts} radius perturbations")]
    BoundaryEigenvalue { attempts: usize },
    #[error("iteration did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("ODE integration did not converge up to {steps} steps")]
    StepConvergenceFailure { steps: usize },
    #[error("no root found: {0}")]
    RootNotFound(String),
    #[error("Hilbert-Schmidt norm {norm:.3e} of the resolvent block exceeds 0.9 at n = {n}")]
    TNormTooLarge { n: u64, norm: f64 },
    #[error("no root of the basic equation in the disc for n = {n}")]
    NoRootInDisc { n: u64 },
    #[error("root count mismatch at n = {n}: found {found}, winding gives {winding}")]
    RootCountMismatch { n: u64, found: usize, winding: i64 },
    #[error("localization threshold not reached for n up to {limit}")]
    NotReached { limit: u64 },
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("fixed-point iteration stalled after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("an eigenvalue is too close to the contour around n^2 = {n2}")]
    EigenvalueOnContour { n2: f64 },
    #[error("contour quadrature did not stabilize with {nodes} nodes")]
    QuadratureStall { nodes: usize },
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
