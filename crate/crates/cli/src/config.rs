//! TOML run configuration. Every section and key is optional except
//! `schema_version`; unknown keys are rejected. Command-line flags override
//! values read here.
//!
//! ```toml
//! schema_version = 1
//!
//! [data]            # gen-data: ring layout or an explicit spec
//! k = 7
//! d = 2
//! n = 700
//! seed = 1
//! # weights = [...], means = [[...]], covariances = [[[...]]]
//!
//! [estimator]       # fit
//! mode = "dqaem"
//! gamma0 = 1.2
//! beta0 = 1.0
//! beta_fixed = true
//! tau = 0.95
//! max_iters = 1000
//! tol = 1e-8
//! components = 7
//! seed = 0
//! init_variance = "global"   # or a number
//! means_only = false
//! cov_floor = 1e-6
//! empty_component = "abort"  # or "reseed"
//!
//! [benchmark]
//! trials = 300
//! modes = ["em", "dsaem", "dqaem"]
//! seed = 0
//! jobs = 4
//! threshold = 1.0
//! dsaem_beta0 = 0.7
//! dqaem_gamma0 = 1.2
//! tau = 0.95
//! components = 7
//! init_variance = 0.7
//!
//! [grid]            # landscape
//! x = "mean:0:0"
//! y = "mean:1:0"
//! x_range = "-8:8:101"
//! y_range = "-8:8:101"
//! beta = 1.0
//! gamma = 0.0
//!
//! [trotter]
//! energies = [0.5, 1.0, 2.0]
//! beta = 1.0
//! gamma = 0.8
//! slices = [16, 64, 256, 1024]
//! ```

use std::path::Path;

use dqaem::{EmptyComponentPolicy, InitCovariance, Mode};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub schema_version: u32,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub benchmark: BenchmarkSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub trotter: TrotterSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub weights: Option<Vec<f64>>,
    pub means: Option<Vec<Vec<f64>>>,
    pub covariances: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub mode: Option<Mode>,
    pub beta0: Option<f64>,
    pub gamma0: Option<f64>,
    pub tau: Option<f64>,
    pub beta_fixed: Option<bool>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub components: Option<usize>,
    pub seed: Option<u64>,
    pub init_variance: Option<InitVariance>,
    pub means_only: Option<bool>,
    pub cov_floor: Option<f64>,
    pub empty_component: Option<EmptyComponentPolicy>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSection {
    pub trials: Option<usize>,
    pub modes: Option<Vec<Mode>>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub threshold: Option<f64>,
    pub dsaem_beta0: Option<f64>,
    pub dqaem_gamma0: Option<f64>,
    pub tau: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub components: Option<usize>,
    pub init_variance: Option<InitVariance>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x: Option<String>,
    pub y: Option<String>,
    pub x_range: Option<String>,
    pub y_range: Option<String>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrotterSection {
    pub energies: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub slices: Option<Vec<usize>>,
}

/// `"global"` or a positive number.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum InitVariance {
    Value(f64),
    Name(String),
}

impl InitVariance {
    pub fn resolve(&self) -> CliResult<InitCovariance> {
        match self {
            InitVariance::Value(v) => crate::args::parse_init_covariance(&v.to_string()),
            InitVariance::Name(s) => crate::args::parse_init_covariance(s),
        }
        .map_err(CliError::Usage)
    }
}

impl RunConfigFile {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(RunConfigFile {
                schema_version: SCHEMA_VERSION,
                ..Default::default()
            });
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: RunConfigFile = toml::from_str(&text).map_err(|e| CliError::input(path, e))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::input(
                path,
                format!(
                    "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                    cfg.schema_version
                ),
            ));
        }
        Ok(cfg)
    }
}

/// Parses an optional string field with a `FromStr` type.
pub fn parse_field<T>(value: &Option<String>, key: &str) -> CliResult<Option<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    value
        .as_deref()
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}")))
        })
        .transpose()
}
