use thiserror::Error;

/// Errors raised by the simulation and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {0}: at least 2 levels are required")]
    InvalidDimension(usize),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("hamiltonian is not hermitian (max deviation {0:.3e})")]
    InvalidHamiltonian(f64),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("steady state is not unique (second smallest singular value {0:.3e})")]
    DegenerateSteadyState(f64),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("time step too large: trace drifted by {0:.3e}")]
    StepSize(f64),
    #[error("density matrix structure not supported: {0}")]
    Structure(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("no entanglement boundary below V = {0:e}")]
    NoBoundary(f64),
    #[error("integration unstable: probability drifted by {0:.3e}, reduce dt")]
    Instability(f64),
    #[error("averaging window is empty")]
    EmptyWindow,
}

pub type Result<T> = std::result::Result<T, Error>;
