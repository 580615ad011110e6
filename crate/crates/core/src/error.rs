use thiserror::Error;

/// Every failure the toolkit can signal.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QestError {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e} exceeds {tolerance:.3e})")]
    NonHermitianInput { asymmetry: f64, tolerance: f64 },
    #[error("not a density matrix: {0}")]
    InvalidState(String),
    #[error("right-hand side has weight {weight:.3e} where the anticommutator is not invertible")]
    InconsistentRhs { weight: f64 },
    #[error("parameter {index} = {value} outside domain [{lo}, {hi}]")]
    DomainError { index: usize, value: f64, lo: f64, hi: f64 },
    #[error("finite-difference derivative failed: {0}")]
    DerivativeError(String),
    #[error("reparametrization Jacobian is singular (|det| = {0:.3e})")]
    SingularJacobian(f64),
    #[error("right logarithmic derivative undefined: derivative {index} leaves the support of the state")]
    RldUndefined { index: usize },
    #[error("information matrix is singular or ill-conditioned (eigenvalue ratio {0:.3e})")]
    SingularQfi(f64),
    #[error("outcome {outcome} has vanishing probability but nonzero derivative")]
    SingularOutcome { outcome: usize },
    #[error("SDP solver failed: {0}")]
    SolverFailure(String),
    #[error("no sampled measurement produced an invertible Fisher matrix")]
    SearchDegenerate,
    #[error("source positions {0} and {1} coincide")]
    DegenerateScene(usize, usize),
    #[error("direct-imaging quadrature did not converge after {0} refinements")]
    GridUnconverged(usize),
    #[error("Hermite-Gauss tail probability {0:.3e} too large, increase q_max")]
    TailTooLarge(f64),
    #[error("maximum-likelihood ascent did not converge in {0} iterations")]
    NonConvergent(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = QestError> = std::result::Result<T, E>;
