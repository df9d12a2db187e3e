//! Maximum-likelihood estimation of Gaussian mixtures with three annealed
//! variants of expectation-maximization:
//!
//! * **EM**: plain posterior/update alternation.
//! * **DSAEM**: posteriors tempered by an inverse temperature `beta < 1`
//!   that is annealed to 1.
//! * **DQAEM**: the hidden label is promoted to a K-state system with a
//!   ring coupling of strength `gamma`; responsibilities are the normalized
//!   diagonal of `exp(-beta (H + gamma R))` and `gamma` is annealed to 0.
//!
//! ```
//! use dqaem::{estimator::{run_fit, EstimatorConfig}, experiments::{generate_dataset, GeneratorSpec}};
//!
//! let data = generate_dataset(&GeneratorSpec::seven_ring()).unwrap();
//! let init = dqaem::estimator::bounding_box_init(&data, 7, 42).unwrap();
//! let fit = run_fit(&data, &init, &EstimatorConfig::dqaem(1.2)).unwrap();
//! assert_eq!(fit.objective_history.len(), fit.iterations + 1);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod experiments;
pub mod gmm;
pub mod kernel;
pub mod seeding;

pub use error::{Error, Result};
pub use estimator::{
    means_only_fit, run_fit, AnnealingSchedule, EmptyComponentPolicy, EstimatorConfig, FitResult,
    InitCovariance, Mode, UpdateScope,
};
pub use gmm::{Dataset, GaussianComponent, MixtureParams, Responsibilities};
pub use kernel::{QuantumHamiltonian, QuantumWeight};
