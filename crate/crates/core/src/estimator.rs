//! The annealed EM loop shared by EM, DSAEM and DQAEM.
//!
//! Each iteration evaluates responsibilities at the current temperature pair
//! `(beta_t, gamma_t)` (classical tempered posteriors when `gamma_t` is zero,
//! normalized quantum-weight diagonals otherwise), records the objective of
//! the current parameters, and applies the weighted M-step. EM pins
//! `(1, 0)`, DSAEM pins `gamma = 0`, and DQAEM follows the full schedule.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::{
    weighted_component_stats, Dataset, GaussianComponent, MixtureParams, Responsibilities,
    DEFAULT_COV_FLOOR,
};
use crate::kernel::annealed_responsibilities;

/// Below this, `gamma_t` is treated as exactly zero and `|1 - beta_t|` as
/// exactly settled.
pub const SCHEDULE_EPS: f64 = 1e-10;

/// Decay constant of the reference schedules.
pub const DEFAULT_TAU: f64 = 0.95;
pub const DEFAULT_MAX_ITERATIONS: usize = 1000;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Em,
    Dsaem,
    Dqaem,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Em => "em",
            Mode::Dsaem => "dsaem",
            Mode::Dqaem => "dqaem",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "em" => Ok(Mode::Em),
            "dsaem" => Ok(Mode::Dsaem),
            "dqaem" => Ok(Mode::Dqaem),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Exponential approach of `beta` to 1 and `gamma` to 0:
///
/// ```text
/// beta_t  = (beta0 - 1) exp(-t / tau) + 1
/// gamma_t = gamma0 exp(-t / tau)
/// ```
///
/// An infinite `tau` holds both values constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealingSchedule {
    pub beta0: f64,
    pub gamma0: f64,
    pub tau: f64,
    #[serde(default)]
    pub beta_fixed: bool,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        Self {
            beta0: 1.0,
            gamma0: 0.0,
            tau: DEFAULT_TAU,
            beta_fixed: false,
        }
    }
}

impl AnnealingSchedule {
    pub fn new(beta0: f64, gamma0: f64, tau: f64, beta_fixed: bool) -> Result<Self> {
        let s = Self {
            beta0,
            gamma0,
            tau,
            beta_fixed,
        };
        s.validate()?;
        Ok(s)
    }

    /// Holds `(beta, gamma)` fixed for every iteration.
    pub fn constant(beta: f64, gamma: f64) -> Result<Self> {
        Self::new(beta, gamma, f64::INFINITY, false)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta0 > 0.0 && self.beta0 <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "beta0 must lie in (0, 1], got {}",
                self.beta0
            )));
        }
        if !(self.gamma0 >= 0.0) || !self.gamma0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gamma0 must be finite and >= 0, got {}",
                self.gamma0
            )));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must be > 0, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    /// `(beta_t, gamma_t)` at iteration `t`.
    pub fn at(&self, t: usize) -> (f64, f64) {
        let decay = (-(t as f64) / self.tau).exp();
        let beta = if self.beta_fixed {
            1.0
        } else {
            (self.beta0 - 1.0) * decay + 1.0
        };
        (beta, self.gamma0 * decay)
    }

    /// True when the schedule no longer moves from iteration `t` on: either
    /// it is stationary by construction or both values are within
    /// [`SCHEDULE_EPS`] of their targets.
    pub fn settled_at(&self, t: usize) -> bool {
        if self.is_stationary() {
            return true;
        }
        let (beta, gamma) = self.at(t);
        gamma < SCHEDULE_EPS && (1.0 - beta).abs() < SCHEDULE_EPS
    }

    fn is_stationary(&self) -> bool {
        self.tau.is_infinite() || ((self.beta_fixed || self.beta0 == 1.0) && self.gamma0 == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyComponentPolicy {
    /// Stop the fit and report the failure.
    #[default]
    Abort,
    /// Move the empty component onto a random data point with the global
    /// covariance and continue.
    Reseed,
}

/// Which parameters the M-step may change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateScope {
    #[default]
    Full,
    /// Only the means move; weights and covariances stay at their initial values.
    MeansOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub mode: Mode,
    pub schedule: AnnealingSchedule,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub empty_component_policy: EmptyComponentPolicy,
    pub seed: u64,
    pub cov_floor: f64,
}

impl EstimatorConfig {
    pub fn new(mode: Mode, schedule: AnnealingSchedule) -> Self {
        Self {
            mode,
            schedule,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            empty_component_policy: EmptyComponentPolicy::Abort,
            seed: 0,
            cov_floor: DEFAULT_COV_FLOOR,
        }
    }

    pub fn em() -> Self {
        Self::new(Mode::Em, AnnealingSchedule::default())
    }

    /// Thermal annealing from `beta0` with the reference decay constant.
    pub fn dsaem(beta0: f64) -> Self {
        Self::new(
            Mode::Dsaem,
            AnnealingSchedule {
                beta0,
                gamma0: 0.0,
                tau: DEFAULT_TAU,
                beta_fixed: false,
            },
        )
    }

    /// Quantum annealing from `gamma0` at fixed `beta = 1` with the reference
    /// decay constant.
    pub fn dqaem(gamma0: f64) -> Self {
        Self::new(
            Mode::Dqaem,
            AnnealingSchedule {
                beta0: 1.0,
                gamma0,
                tau: DEFAULT_TAU,
                beta_fixed: true,
            },
        )
    }

    pub fn with_schedule(mut self, schedule: AnnealingSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_policy(mut self, policy: EmptyComponentPolicy) -> Self {
        self.empty_component_policy = policy;
        self
    }

    /// The schedule after the mode's restrictions are applied.
    pub fn effective_schedule(&self) -> AnnealingSchedule {
        let s = self.schedule;
        match self.mode {
            Mode::Em => AnnealingSchedule {
                beta0: 1.0,
                gamma0: 0.0,
                tau: s.tau,
                beta_fixed: true,
            },
            Mode::Dsaem => AnnealingSchedule { gamma0: 0.0, ..s },
            Mode::Dqaem => s,
        }
    }

    /// `(beta_t, gamma_t)` actually used at iteration `t`.
    pub fn temperature_at(&self, t: usize) -> (f64, f64) {
        let (beta, gamma) = self.effective_schedule().at(t);
        (beta, if gamma < SCHEDULE_EPS { 0.0 } else { gamma })
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be >= 0, got {}",
                self.tolerance
            )));
        }
        if !(self.cov_floor >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cov_floor must be >= 0, got {}",
                self.cov_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FailureReason {
    EmptyComponent { component: usize, iteration: usize },
    NumericalRange { iteration: usize, message: String },
    SingularCovariance { iteration: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Temperature {
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub mode: Mode,
    pub final_params: MixtureParams,
    /// Log-likelihood of each iterate for EM, negative free energy at that
    /// iteration's temperature otherwise.
    pub objective_history: Vec<f64>,
    pub param_trajectory: Vec<MixtureParams>,
    pub temperatures: Vec<Temperature>,
    pub iterations: usize,
    pub converged: bool,
    pub failure_reason: Option<FailureReason>,
}

impl FitResult {
    pub fn failed(&self) -> bool {
        self.failure_reason.is_some()
    }

    /// Index of the first iteration from which the temperature no longer changes.
    pub fn settled_from(&self) -> usize {
        let last = match self.temperatures.last() {
            Some(t) => *t,
            None => return 0,
        };
        self.temperatures
            .iter()
            .rposition(|t| *t != last)
            .map_or(0, |i| i + 1)
    }
}

/// Initial parameters with means uniform in the data's bounding box,
/// covariances equal to the global sample covariance, and uniform weights.
/// Covariance assigned to every component at initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "variance")]
pub enum InitCovariance {
    /// Sample covariance of the whole dataset plus the default floor.
    Global,
    /// `v * I`.
    Isotropic(f64),
}

pub fn bounding_box_init(data: &Dataset, components: usize, seed: u64) -> Result<MixtureParams> {
    bounding_box_init_with(data, components, seed, InitCovariance::Global)
}

/// Means uniform in the data bounding box, uniform weights.
pub fn bounding_box_init_with(
    data: &Dataset,
    components: usize,
    seed: u64,
    covariance: InitCovariance,
) -> Result<MixtureParams> {
    if components == 0 {
        return Err(Error::InvalidArgument(
            "component count must be positive".into(),
        ));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let cov = match covariance {
        InitCovariance::Global => {
            let (_, mut cov) = data.mean_and_covariance();
            for i in 0..cov.nrows() {
                cov[(i, i)] += DEFAULT_COV_FLOOR;
            }
            cov
        }
        InitCovariance::Isotropic(v) if v.is_finite() && v > 0.0 => {
            DMatrix::identity(data.dim(), data.dim()) * v
        }
        InitCovariance::Isotropic(v) => {
            return Err(Error::InvalidArgument(format!(
                "initial variance must be positive, got {v}"
            )))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = data.bounding_box();
    let means: Vec<DVector<f64>> = (0..components)
        .map(|_| {
            DVector::from_fn(data.dim(), |j, _| {
                if hi[j] > lo[j] {
                    rng.random_range(lo[j]..hi[j])
                } else {
                    lo[j]
                }
            })
        })
        .collect();
    let weights = vec![1.0 / components as f64; components];
    MixtureParams::from_parts(&weights, &means, &vec![cov; components])
}

/// Full-parameter annealed fit.
pub fn run_fit(
    data: &Dataset,
    init: &MixtureParams,
    config: &EstimatorConfig,
) -> Result<FitResult> {
    fit(data, init, config, UpdateScope::Full)
}

/// Fit that moves only the means, holding weights and covariances at `init`.
pub fn means_only_fit(
    data: &Dataset,
    init: &MixtureParams,
    config: &EstimatorConfig,
) -> Result<FitResult> {
    fit(data, init, config, UpdateScope::MeansOnly)
}

pub fn fit(
    data: &Dataset,
    init: &MixtureParams,
    config: &EstimatorConfig,
    scope: UpdateScope,
) -> Result<FitResult> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    if data.dim() != init.dim() {
        return Err(Error::DimensionMismatch {
            expected: init.dim(),
            found: data.dim(),
        });
    }
    if config.mode == Mode::Dqaem && config.schedule.gamma0 > 0.0 && init.len() < 2 {
        return Err(Error::InvalidOrder(init.len()));
    }

    let schedule = config.effective_schedule();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut theta = init.clone();
    let mut history = Vec::new();
    let mut trajectory = Vec::new();
    let mut temperatures = Vec::new();
    let mut converged = false;
    let mut failure = None;

    for t in 0..=config.max_iterations {
        let (beta, gamma) = config.temperature_at(t);
        let (resp, objective) = match annealed_responsibilities(data, &theta, beta, gamma) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(classify_failure(e, t));
                break;
            }
        };
        if !objective.is_finite() {
            failure = Some(FailureReason::NumericalRange {
                iteration: t,
                message: format!("objective {objective} at beta={beta}, gamma={gamma}"),
            });
            break;
        }
        history.push(objective);
        trajectory.push(theta.clone());
        temperatures.push(Temperature { beta, gamma });

        if t > 0 && schedule.settled_at(t - 1) {
            let prev = history[t - 1];
            let change = (objective - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
            if change < config.tolerance {
                converged = true;
                break;
            }
        }
        if t == config.max_iterations {
            break;
        }
        match update(data, &resp, &theta, config, scope, &mut rng) {
            Ok(next) => theta = next,
            Err(e) => {
                failure = Some(classify_failure(e, t));
                break;
            }
        }
    }

    if history.is_empty() {
        // the initial evaluation itself failed; report the init unchanged
        return Ok(FitResult {
            mode: config.mode,
            final_params: init.clone(),
            objective_history: vec![],
            param_trajectory: vec![],
            temperatures: vec![],
            iterations: 0,
            converged: false,
            failure_reason: failure,
        });
    }
    let final_params = trajectory.last().cloned().expect("non-empty trajectory");
    Ok(FitResult {
        mode: config.mode,
        final_params,
        iterations: history.len() - 1,
        objective_history: history,
        param_trajectory: trajectory,
        temperatures,
        converged,
        failure_reason: failure,
    })
}

fn classify_failure(e: Error, iteration: usize) -> FailureReason {
    match e {
        Error::EmptyComponent { component, .. } => FailureReason::EmptyComponent {
            component,
            iteration,
        },
        Error::SingularCovariance(message) => {
            FailureReason::SingularCovariance { iteration, message }
        }
        other => FailureReason::NumericalRange {
            iteration,
            message: other.to_string(),
        },
    }
}

fn update(
    data: &Dataset,
    resp: &Responsibilities,
    current: &MixtureParams,
    config: &EstimatorConfig,
    scope: UpdateScope,
    rng: &mut ChaCha8Rng,
) -> Result<MixtureParams> {
    let k = current.len();
    let d = data.dim();
    let mut stats = Vec::with_capacity(k);
    for c in 0..k {
        match weighted_component_stats(data, resp, c) {
            Some(s) => stats.push(Some(s)),
            None if config.empty_component_policy == EmptyComponentPolicy::Reseed => {
                stats.push(None)
            }
            None => {
                return Err(Error::EmptyComponent {
                    component: c,
                    mass: resp.matrix().column(c).sum(),
                });
            }
        }
    }

    if scope == UpdateScope::MeansOnly {
        let means: Vec<DVector<f64>> = stats
            .into_iter()
            .map(|s| match s {
                Some((_, mean, _)) => mean,
                None => data.points()[rng.random_range(0..data.len())].clone(),
            })
            .collect();
        return current.with_means(&means);
    }

    let n = data.len() as f64;
    let global_cov = stats
        .iter()
        .any(Option::is_none)
        .then(|| data.mean_and_covariance().1);
    let mut raw = Vec::with_capacity(k);
    for s in stats {
        let (mass, mean, scatter) = match s {
            Some(s) => s,
            None => {
                let point = data.points()[rng.random_range(0..data.len())].clone();
                (
                    1.0,
                    point,
                    global_cov
                        .clone()
                        .expect("computed when any component is empty"),
                )
            }
        };
        let mut cov = (&scatter + scatter.transpose()) * 0.5;
        for i in 0..d {
            cov[(i, i)] += config.cov_floor;
        }
        raw.push((mass, mean, cov));
    }
    let total: f64 = raw.iter().map(|r| r.0).sum();
    debug_assert!(total > 0.0 && total <= n + 1.0 + 1e-6 * n);
    let components = raw
        .into_iter()
        .map(|(mass, mean, cov)| GaussianComponent::new(mass / total, mean, cov))
        .collect::<Result<Vec<_>>>()?;
    MixtureParams::new(components)
}

/// Convenience for tests and tools: one plain EM update.
pub fn em_iteration(
    data: &Dataset,
    params: &MixtureParams,
    cov_floor: f64,
) -> Result<MixtureParams> {
    let (resp, _) = annealed_responsibilities(data, params, 1.0, 0.0)?;
    crate::gmm::m_step(data, &resp, cov_floor)
}

/// Identity matrix scaled by `v`, used for building isotropic covariances.
pub fn isotropic(d: usize, v: f64) -> DMatrix<f64> {
    DMatrix::identity(d, d) * v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::log_likelihood;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn two_cluster_data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let x = (i as f64 * 0.37).sin();
                if i % 2 == 0 {
                    vec![-3.0 + x]
                } else {
                    vec![3.0 + 0.5 * x]
                }
            })
            .collect();
        Dataset::from_rows(&rows).unwrap()
    }

    #[test]
    fn reference_schedule_start_values() {
        let dsaem = AnnealingSchedule::new(0.7, 0.0, 0.95, false).unwrap();
        assert_eq!(dsaem.at(0).0, 0.7);
        let dqaem = AnnealingSchedule::new(1.0, 1.2, 0.95, true).unwrap();
        assert_eq!(dqaem.at(0), (1.0, 1.2));
    }

    #[test]
    fn schedule_limits() {
        let s = AnnealingSchedule::new(0.7, 1.2, 0.95, false).unwrap();
        let (b, g) = s.at(100);
        assert!((b - 1.0).abs() < 1e-12);
        assert!(g.abs() < 1e-12);
        assert!(s.settled_at(100));
        assert!(!s.settled_at(3));
        let mut prev = s.at(0);
        for t in 1..50 {
            let cur = s.at(t);
            assert!(cur.0 >= prev.0 && cur.1 <= prev.1);
            prev = cur;
        }
    }

    #[test]
    fn schedule_rejects_bad_values() {
        assert!(AnnealingSchedule::new(0.0, 0.0, 1.0, false).is_err());
        assert!(AnnealingSchedule::new(1.2, 0.0, 1.0, false).is_err());
        assert!(AnnealingSchedule::new(1.0, -1.0, 1.0, false).is_err());
        assert!(AnnealingSchedule::new(1.0, 0.0, 0.0, false).is_err());
    }

    #[test]
    fn history_lengths_match_iterations() {
        let data = two_cluster_data();
        let init = MixtureParams::from_parts(
            &[0.5, 0.5],
            &[dv(&[-1.0]), dv(&[1.0])],
            &[isotropic(1, 4.0), isotropic(1, 4.0)],
        )
        .unwrap();
        for cfg in [
            EstimatorConfig::em(),
            EstimatorConfig::dsaem(0.7),
            EstimatorConfig::dqaem(1.2),
        ] {
            let r = run_fit(&data, &init, &cfg).unwrap();
            assert!(r.converged, "{:?}", r.mode);
            assert_eq!(r.objective_history.len(), r.iterations + 1);
            assert_eq!(r.param_trajectory.len(), r.iterations + 1);
            assert_eq!(r.final_params, *r.param_trajectory.last().unwrap());
        }
    }

    #[test]
    fn em_finds_two_clusters() {
        let data = two_cluster_data();
        let init = MixtureParams::from_parts(
            &[0.5, 0.5],
            &[dv(&[-1.0]), dv(&[1.0])],
            &[isotropic(1, 4.0), isotropic(1, 4.0)],
        )
        .unwrap();
        let r = run_fit(&data, &init, &EstimatorConfig::em()).unwrap();
        let m = r.final_params.means();
        assert!((m[0][0] + 3.0).abs() < 0.5 && (m[1][0] - 3.0).abs() < 0.5);
        let ll = log_likelihood(&data, &r.final_params).unwrap();
        assert!((ll - r.objective_history.last().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn quantum_mode_without_gamma_is_em() {
        let data = two_cluster_data();
        let init = MixtureParams::from_parts(
            &[0.3, 0.7],
            &[dv(&[0.5]), dv(&[1.0])],
            &[isotropic(1, 2.0), isotropic(1, 1.0)],
        )
        .unwrap();
        let em = run_fit(&data, &init, &EstimatorConfig::em()).unwrap();
        let q = run_fit(&data, &init, &EstimatorConfig::dqaem(0.0)).unwrap();
        assert_eq!(em.iterations, q.iterations);
        for (a, b) in em.param_trajectory.iter().zip(&q.param_trajectory) {
            assert!(a.max_abs_diff(b) <= 1e-10);
        }
    }

    #[test]
    fn means_only_keeps_weights_and_covariances() {
        let data = two_cluster_data();
        let init = MixtureParams::from_parts(
            &[0.4, 0.6],
            &[dv(&[-1.0]), dv(&[1.0])],
            &[isotropic(1, 1.0), isotropic(1, 2.0)],
        )
        .unwrap();
        let r = means_only_fit(&data, &init, &EstimatorConfig::dqaem(1.2)).unwrap();
        for p in &r.param_trajectory {
            assert_eq!(p.weights(), init.weights());
            for (a, b) in p.components().iter().zip(init.components()) {
                assert_eq!(a.covariance(), b.covariance());
            }
        }
    }

    #[test]
    fn abort_policy_reports_empty_component() {
        // second component sits absurdly far away, its mass underflows to 0
        let data = Dataset::from_rows(&[vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        let init = MixtureParams::from_parts(
            &[0.5, 0.5],
            &[dv(&[0.5]), dv(&[1e4])],
            &[isotropic(1, 1.0), isotropic(1, 1.0)],
        )
        .unwrap();
        let r = run_fit(&data, &init, &EstimatorConfig::em()).unwrap();
        assert_eq!(
            r.failure_reason,
            Some(FailureReason::EmptyComponent {
                component: 1,
                iteration: 0
            })
        );
        assert!(!r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.final_params, init);
    }

    #[test]
    fn reseed_policy_recovers() {
        let data =
            Dataset::from_rows(&[vec![0.0], vec![0.5], vec![1.0], vec![5.0], vec![5.5]]).unwrap();
        let init = MixtureParams::from_parts(
            &[0.5, 0.5],
            &[dv(&[0.5]), dv(&[1e4])],
            &[isotropic(1, 1.0), isotropic(1, 1.0)],
        )
        .unwrap();
        let cfg = EstimatorConfig::em()
            .with_policy(EmptyComponentPolicy::Reseed)
            .with_seed(3);
        let r = run_fit(&data, &init, &cfg).unwrap();
        assert!(r.failure_reason.is_none());
        let m1 = r.param_trajectory[1].means()[1][0];
        assert!(data.points().iter().any(|p| p[0] == m1));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("DQAEM".parse::<Mode>().unwrap(), Mode::Dqaem);
        assert!("sa".parse::<Mode>().is_err());
    }
}
