use thiserror::Error;

/// Errors raised by the mixture, kernel, estimator and experiment layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("covariance is not positive definite: {0}")]
    SingularCovariance(String),

    #[error("mixture weight {weight} of component {component} is not a positive probability")]
    InvalidWeight { component: usize, weight: f64 },

    #[error("mixture weights sum to {0}, expected 1")]
    WeightsNotNormalized(f64),

    #[error("operator order {0} is too small, at least 2 states are required")]
    InvalidOrder(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error(
        "component {component} received total responsibility {mass:e}, below the emptiness floor"
    )]
    EmptyComponent { component: usize, mass: f64 },

    #[error(
        "exponential weight out of range (beta={beta}, gamma={gamma}, energy spread={spread})"
    )]
    NumericalRange { beta: f64, gamma: f64, spread: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("every trial failed, the report would be empty")]
    EmptyReport,
}

pub type Result<T> = std::result::Result<T, Error>;
