use thiserror::Error;

/// Errors raised while integrating a vector field.
#[derive(Debug, Clone, Error)]
pub enum DynError {
    /// A state component became NaN/inf or the state norm exceeded the
    /// divergence bound. Basin mappers translate this into label 0.
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("adaptive step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("substep budget exhausted at t = {t}")]
    MaxSteps { t: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("initial state has length {got}, system dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Errors raised by the basin mappers and measure estimators.
#[derive(Debug, Clone, Error)]
pub enum MapError {
    #[error("initial condition lies outside the grid box")]
    OutsideGrid,
    #[error("attractor store is empty")]
    EmptyStore,
    #[error("no attractor with id {0} in the store")]
    UnknownAttractor(u32),
    #[error("no resolved initial condition converged to attractor {0}")]
    EmptyBasin(u32),
    #[error(transparent)]
    Dyn(#[from] DynError),
}

/// Errors raised by the local resilience measures.
#[derive(Debug, Clone, Error)]
pub enum LocalError {
    #[error("matrix has spectral abscissa >= 0; amplification envelope is unbounded")]
    UnstableMatrix,
    #[error("matrix contains non-finite entries")]
    NonFiniteMatrix,
    #[error(transparent)]
    Dyn(#[from] DynError),
}

/// Errors raised by the continuation driver.
#[derive(Debug, Clone, Error)]
pub enum ContinuationError {
    #[error("no attractors found at step {step} (parameter value {value})")]
    NoAttractorsFound { step: usize, value: f64 },
    #[error("parameter curve is empty or inconsistent: {0}")]
    InvalidCurve(String),
    #[error(transparent)]
    Map(#[from] MapError),
}
