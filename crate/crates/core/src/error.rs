use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix {0} is not symmetric")]
    NotSymmetric(&'static str),
    #[error("matrix {0} is not positive semidefinite")]
    NotPositiveSemidefinite(&'static str),
    #[error("factorization of {0} failed (matrix not positive definite)")]
    Factorization(&'static str),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("Riccati iteration did not converge after {0} iterations; (A, B) may not be stabilizable")]
    RiccatiDivergence(usize),
    #[error("closed loop A - BK is not Schur stable (spectral radius {0})")]
    UnstableClosedLoop(f64),
    #[error("equilibrium map: {0}")]
    Equilibrium(String),
    #[error("invalid constraint set: {0}")]
    Constraints(String),
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("invalid governor configuration: {0}")]
    GovernorConfig(String),
    #[error("governor decomposition residual {0:e} exceeds tolerance")]
    Decomposition(f64),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("initial state is not feasible for the MPC problem: {0}")]
    InfeasibleInitialState(String),
    #[error("malformed QP description: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
