//! Synthetic data, the multi-trial success-ratio benchmark, negative free
//! energy landscapes, and trajectory comparisons.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    bounding_box_init_with, fit, AnnealingSchedule, EstimatorConfig, FitResult, InitCovariance,
    Mode, UpdateScope,
};
use crate::gmm::{log_likelihood, Dataset, MixtureParams};
use crate::kernel::negative_free_energy;
use crate::seeding::{derive_seed, STREAM_DATA, STREAM_ESTIMATOR, STREAM_INIT};

/// Parameters of a synthetic Gaussian mixture sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub n: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// The generating mixture; fails when the spec is inconsistent.
    pub fn mixture(&self) -> Result<MixtureParams> {
        let k = self.components();
        if k == 0 {
            return Err(Error::EmptyInput("generator components"));
        }
        if self.means.len() != k || self.covariances.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: self.means.len().min(self.covariances.len()),
            });
        }
        if self.n < k {
            return Err(Error::InvalidArgument(format!(
                "sample size {} is smaller than K = {k}",
                self.n
            )));
        }
        let d = self.dim();
        let means: Vec<DVector<f64>> = self
            .means
            .iter()
            .map(|m| DVector::from_column_slice(m))
            .collect();
        let covs = self
            .covariances
            .iter()
            .map(|c| {
                if c.len() != d || c.iter().any(|r| r.len() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: c.len(),
                    });
                }
                Ok(DMatrix::from_fn(d, d, |i, j| c[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        MixtureParams::from_parts(&self.weights, &means, &covs)
    }

    /// Seven isotropic components on a ring, used as the default
    /// benchmark problem. Versioned: changing any value changes results.
    pub fn seven_ring() -> Self {
        Self::ring(7, 2, 700, 1)
    }

    /// `k` components with means spaced evenly on a circle of radius 5 in the
    /// first two coordinates (on a line for `d = 1`), isotropic variances
    /// alternating between 1.0 and 0.6, equal weights.
    pub fn ring(k: usize, d: usize, n: usize, seed: u64) -> Self {
        let means = (0..k)
            .map(|i| {
                let mut m = vec![0.0; d];
                if d == 1 {
                    m[0] = RING_RADIUS * (2.0 * i as f64 - (k as f64 - 1.0)) / 2.0;
                } else if d > 1 {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                    m[0] = RING_RADIUS * a.cos();
                    m[1] = RING_RADIUS * a.sin();
                }
                m
            })
            .collect();
        let covariances = (0..k)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { 0.6 };
                (0..d)
                    .map(|r| (0..d).map(|c| if r == c { s } else { 0.0 }).collect())
                    .collect()
            })
            .collect();
        GeneratorSpec {
            weights: vec![1.0 / k as f64; k],
            means,
            covariances,
            n,
            seed,
        }
    }
}

/// Bumped whenever [`GeneratorSpec::seven_ring`] changes.
pub const SEVEN_RING_VERSION: u32 = 1;

const RING_RADIUS: f64 = 5.0;

/// Draws `spec.n` labelled points; deterministic in `spec.seed`.
pub fn generate_dataset(spec: &GeneratorSpec) -> Result<Dataset> {
    let truth = spec.mixture()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, STREAM_DATA, 0));
    let picker =
        WeightedIndex::new(&spec.weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let factors: Vec<DMatrix<f64>> = truth
        .components()
        .iter()
        .map(|c| {
            Cholesky::new(c.covariance().clone())
                .expect("validated SPD")
                .unpack()
        })
        .collect();
    let d = truth.dim();
    let mut points = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let k = picker.sample(&mut rng);
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        points.push(truth.components()[k].mean() + &factors[k] * z);
        labels.push(k);
    }
    let mut data = Dataset::new(points)?.with_labels(labels)?;
    data.ground_truth = Some(truth);
    Ok(data)
}

/// The reference configurations: EM, DSAEM from `beta0 = 0.7`, and DQAEM
/// from `gamma0 = 1.2` at fixed `beta = 1`, all with `tau = 0.95`.
pub fn reference_configs() -> Vec<EstimatorConfig> {
    vec![
        EstimatorConfig::em(),
        EstimatorConfig::dsaem(0.7),
        EstimatorConfig::dqaem(1.2),
    ]
}

/// Source of per-trial initial parameters.
pub trait InitSampler: Sync {
    fn sample(&self, data: &Dataset, seed: u64) -> Result<MixtureParams>;
}

/// Variance of the isotropic initial covariances used by the seven-ring benchmark.
pub const BENCHMARK_INIT_VARIANCE: f64 = 0.7;

/// [`bounding_box_init_with`] with a fixed component count.
#[derive(Debug, Clone, Copy)]
pub struct BoundingBoxInit {
    pub components: usize,
    pub covariance: InitCovariance,
}

impl BoundingBoxInit {
    pub fn global(components: usize) -> Self {
        BoundingBoxInit {
            components,
            covariance: InitCovariance::Global,
        }
    }

    /// Initializer for the seven-ring benchmark.
    pub fn benchmark() -> Self {
        BoundingBoxInit {
            components: 7,
            covariance: InitCovariance::Isotropic(BENCHMARK_INIT_VARIANCE),
        }
    }
}

impl InitSampler for BoundingBoxInit {
    fn sample(&self, data: &Dataset, seed: u64) -> Result<MixtureParams> {
        bounding_box_init_with(data, self.components, seed, self.covariance)
    }
}

impl<F> InitSampler for F
where
    F: Fn(&Dataset, u64) -> Result<MixtureParams> + Sync,
{
    fn sample(&self, data: &Dataset, seed: u64) -> Result<MixtureParams> {
        self(data, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkSettings {
    pub trials: usize,
    pub seed: u64,
    /// A trial succeeds when its final log-likelihood is within this many
    /// nats of the best final value seen across all trials and estimators.
    pub success_threshold: f64,
    /// Worker threads; `None` uses the global rayon pool.
    pub jobs: Option<usize>,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        Self {
            trials: 300,
            seed: 0,
            success_threshold: 1.0,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub mode: Mode,
    pub schedule: AnnealingSchedule,
    pub trials: usize,
    pub successes: usize,
    pub failures: usize,
    pub success_ratio: f64,
    pub mean_final_objective: f64,
    pub mean_iterations: f64,
    /// Final log-likelihood per trial, `None` for failed trials.
    pub final_log_likelihoods: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub trials: usize,
    pub seed: u64,
    pub success_threshold: f64,
    pub best_objective: f64,
    pub estimators: Vec<EstimatorSummary>,
}

impl BenchmarkReport {
    /// Success ratios recomputed for another threshold.
    pub fn ratios_at(&self, threshold: f64) -> Vec<f64> {
        self.estimators
            .iter()
            .map(|e| {
                count_successes(&e.final_log_likelihoods, self.best_objective, threshold) as f64
                    / e.trials as f64
            })
            .collect()
    }

    pub fn summary(&self, mode: Mode) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|e| e.mode == mode)
    }

    /// Fixed-width text table, one row per estimator.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<8} {:>7} {:>9} {:>8} {:>9} {:>14} {:>10}\n",
            "mode", "trials", "successes", "failures", "ratio", "mean final LL", "mean iters"
        );
        for e in &self.estimators {
            out.push_str(&format!(
                "{:<8} {:>7} {:>9} {:>8} {:>8.1}% {:>14.4} {:>10.1}\n",
                e.mode.name(),
                e.trials,
                e.successes,
                e.failures,
                100.0 * e.success_ratio,
                e.mean_final_objective,
                e.mean_iterations
            ));
        }
        out.push_str(&format!(
            "best final log-likelihood {:.6}, threshold {} nats\n",
            self.best_objective, self.success_threshold
        ));
        out
    }
}

fn count_successes(finals: &[Option<f64>], best: f64, threshold: f64) -> usize {
    finals
        .iter()
        .flatten()
        .filter(|&&v| v >= best - threshold)
        .count()
}

struct TrialOutcome {
    final_ll: Option<f64>,
    iterations: usize,
}

/// Runs every configuration from the same per-trial initializations and
/// scores each final log-likelihood against the best one observed.
pub fn run_benchmark(
    data: &Dataset,
    configs: &[EstimatorConfig],
    settings: &BenchmarkSettings,
    sampler: &dyn InitSampler,
) -> Result<BenchmarkReport> {
    if settings.trials == 0 {
        return Err(Error::InvalidArgument(
            "at least one trial is required".into(),
        ));
    }
    if configs.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one estimator is required".into(),
        ));
    }
    for c in configs {
        c.validate()?;
    }
    if settings.success_threshold.is_nan() {
        return Err(Error::InvalidArgument("success threshold is NaN".into()));
    }

    let run_trial = |trial: usize| -> Vec<TrialOutcome> {
        let init = sampler.sample(data, derive_seed(settings.seed, STREAM_INIT, trial as u64));
        configs
            .iter()
            .map(|cfg| {
                let Ok(init) = init.as_ref() else {
                    return TrialOutcome {
                        final_ll: None,
                        iterations: 0,
                    };
                };
                let cfg = cfg.with_seed(derive_seed(settings.seed, STREAM_ESTIMATOR, trial as u64));
                match fit(data, init, &cfg, UpdateScope::Full) {
                    Ok(r) if !r.failed() => TrialOutcome {
                        final_ll: log_likelihood(data, &r.final_params)
                            .ok()
                            .filter(|v| v.is_finite()),
                        iterations: r.iterations,
                    },
                    Ok(r) => TrialOutcome {
                        final_ll: None,
                        iterations: r.iterations,
                    },
                    Err(_) => TrialOutcome {
                        final_ll: None,
                        iterations: 0,
                    },
                }
            })
            .collect()
    };

    let outcomes: Vec<Vec<TrialOutcome>> = match settings.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            pool.install(|| {
                (0..settings.trials)
                    .into_par_iter()
                    .map(run_trial)
                    .collect()
            })
        }
        None => (0..settings.trials)
            .into_par_iter()
            .map(run_trial)
            .collect(),
    };

    let best = outcomes
        .iter()
        .flatten()
        .filter_map(|o| o.final_ll)
        .fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return Err(Error::EmptyReport);
    }

    let estimators = configs
        .iter()
        .enumerate()
        .map(|(j, cfg)| {
            let finals: Vec<Option<f64>> = outcomes.iter().map(|t| t[j].final_ll).collect();
            let ok: Vec<f64> = finals.iter().flatten().copied().collect();
            let successes = count_successes(&finals, best, settings.success_threshold);
            let iterations: usize = outcomes.iter().map(|t| t[j].iterations).sum();
            EstimatorSummary {
                mode: cfg.mode,
                schedule: cfg.effective_schedule(),
                trials: settings.trials,
                successes,
                failures: settings.trials - ok.len(),
                success_ratio: successes as f64 / settings.trials as f64,
                mean_final_objective: if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().sum::<f64>() / ok.len() as f64
                },
                mean_iterations: iterations as f64 / settings.trials as f64,
                final_log_likelihoods: finals,
            }
        })
        .collect();

    Ok(BenchmarkReport {
        trials: settings.trials,
        seed: settings.seed,
        success_threshold: settings.success_threshold,
        best_objective: best,
        estimators,
    })
}

/// Addresses one scalar entry of the mixture parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ParamSelector {
    Mean { component: usize, coord: usize },
    Variance { component: usize, coord: usize },
}

impl std::str::FromStr for ParamSelector {
    type Err = Error;

    /// `mean:<component>:<coord>` or `var:<component>:<coord>`, zero-based.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || {
            Error::InvalidArgument(format!(
                "bad selector `{s}`, expected mean:<k>:<j> or var:<k>:<j>"
            ))
        };
        if parts.len() != 3 {
            return Err(bad());
        }
        let component = parts[1].parse().map_err(|_| bad())?;
        let coord = parts[2].parse().map_err(|_| bad())?;
        match parts[0] {
            "mean" => Ok(ParamSelector::Mean { component, coord }),
            "var" => Ok(ParamSelector::Variance { component, coord }),
            _ => Err(bad()),
        }
    }
}

impl ParamSelector {
    fn apply(&self, base: &MixtureParams, value: f64) -> Result<MixtureParams> {
        let (component, coord) = match *self {
            ParamSelector::Mean { component, coord }
            | ParamSelector::Variance { component, coord } => (component, coord),
        };
        if component >= base.len() {
            return Err(Error::InvalidArgument(format!(
                "component {component} out of range"
            )));
        }
        if coord >= base.dim() {
            return Err(Error::InvalidArgument(format!(
                "coordinate {coord} out of range"
            )));
        }
        let weights = base.weights();
        let mut means = base.means();
        let mut covs: Vec<DMatrix<f64>> = base
            .components()
            .iter()
            .map(|c| c.covariance().clone())
            .collect();
        match self {
            ParamSelector::Mean { .. } => means[component][coord] = value,
            ParamSelector::Variance { .. } => covs[component][(coord, coord)] = value,
        }
        MixtureParams::from_parts(&weights, &means, &covs)
    }
}

/// Evenly spaced axis including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        Self {
            start,
            stop,
            points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => vec![],
            1 => vec![self.start],
            n => {
                let last = (n - 1) as f64;
                (0..n)
                    .map(|i| (self.start * (last - i as f64) + self.stop * i as f64) / last)
                    .collect()
            }
        }
    }
}

impl std::str::FromStr for GridAxis {
    type Err = Error;

    /// `start:stop:points`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad axis `{s}`, expected start:stop:points"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(GridAxis {
            start: parts[0].parse().map_err(|_| bad())?,
            stop: parts[1].parse().map_err(|_| bad())?,
            points: parts[2].parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeGrid {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// `values[i][j]` is the negative free energy at `(axis1[i], axis2[j])`.
    pub values: Vec<Vec<f64>>,
    pub beta: f64,
    pub gamma: f64,
}

impl LandscapeGrid {
    /// Grid cells strictly greater than every one of their (up to eight)
    /// neighbours.
    pub fn local_maxima(&self) -> Vec<(usize, usize)> {
        let n1 = self.axis1.len();
        let n2 = self.axis2.len();
        let mut out = Vec::new();
        for i in 0..n1 {
            for j in 0..n2 {
                let v = self.values[i][j];
                let mut is_max = true;
                'scan: for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if a < 0 || b < 0 || a >= n1 as i64 || b >= n2 as i64 {
                            continue;
                        }
                        if self.values[a as usize][b as usize] >= v {
                            is_max = false;
                            break 'scan;
                        }
                    }
                }
                if is_max {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Evaluates the negative free energy on a 2-d grid of two scalar
/// parameters, all other parameters held at `base`.
pub fn landscape(
    data: &Dataset,
    base: &MixtureParams,
    selectors: (ParamSelector, ParamSelector),
    axes: (GridAxis, GridAxis),
    beta: f64,
    gamma: f64,
) -> Result<LandscapeGrid> {
    let axis1 = axes.0.values();
    let axis2 = axes.1.values();
    if axis1.is_empty() || axis2.is_empty() {
        return Err(Error::EmptyInput("landscape grid"));
    }
    let values = axis1
        .par_iter()
        .map(|&a| {
            let first = selectors.0.apply(base, a)?;
            axis2
                .iter()
                .map(|&b| {
                    let params = selectors.1.apply(&first, b)?;
                    negative_free_energy(data, &params, beta, gamma)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LandscapeGrid {
        axis1,
        axis2,
        values,
        beta,
        gamma,
    })
}

/// Runs every configuration from the same initialization.
pub fn trajectory_experiment(
    data: &Dataset,
    init: &MixtureParams,
    configs: &[EstimatorConfig],
    scope: UpdateScope,
) -> Result<Vec<FitResult>> {
    configs
        .iter()
        .map(|cfg| fit(data, init, cfg, scope))
        .collect()
}

/// Two 1-d components with known weights and variances where only the means
/// are estimated. The generating means are `{-2, 4}`; the label-swapped
/// configuration near `{4, -2}` is a strictly worse local optimum because the
/// two variances differ.
pub mod barrier {
    use super::*;

    pub const WEIGHTS: [f64; 2] = [0.5, 0.5];
    pub const VARIANCES: [f64; 2] = [1.0, 2.0];
    pub const TRUE_MEANS: [f64; 2] = [-2.0, 4.0];
    pub const LOCAL_MEANS: [f64; 2] = [4.0, -2.0];
    pub const INIT_MEANS: [f64; 2] = [2.0, -4.0];
    pub const N: usize = 200;
    pub const SEED: u64 = 1;

    pub fn spec() -> GeneratorSpec {
        GeneratorSpec {
            weights: WEIGHTS.to_vec(),
            means: TRUE_MEANS.iter().map(|&m| vec![m]).collect(),
            covariances: VARIANCES.iter().map(|&v| vec![vec![v]]).collect(),
            n: N,
            seed: SEED,
        }
    }

    pub fn dataset() -> Result<Dataset> {
        generate_dataset(&spec())
    }

    /// Model with the fixed weights and variances and the given means.
    pub fn model(means: [f64; 2]) -> MixtureParams {
        let m: Vec<DVector<f64>> = means.iter().map(|&v| DVector::from_element(1, v)).collect();
        let c: Vec<DMatrix<f64>> = VARIANCES
            .iter()
            .map(|&v| DMatrix::from_element(1, 1, v))
            .collect();
        MixtureParams::from_parts(&WEIGHTS, &m, &c).expect("constant instance is valid")
    }

    pub fn init() -> MixtureParams {
        model(INIT_MEANS)
    }

    /// Grid used for the landscape figures.
    pub fn axes() -> (GridAxis, GridAxis) {
        (GridAxis::new(-8.0, 8.0, 101), GridAxis::new(-8.0, 8.0, 101))
    }

    pub fn selectors() -> (ParamSelector, ParamSelector) {
        (
            ParamSelector::Mean {
                component: 0,
                coord: 0,
            },
            ParamSelector::Mean {
                component: 1,
                coord: 0,
            },
        )
    }

    /// Quantum schedule strong enough to flatten the landscape before the
    /// means commit to a basin.
    pub fn dqaem_config() -> EstimatorConfig {
        EstimatorConfig::new(
            Mode::Dqaem,
            AnnealingSchedule {
                beta0: 1.0,
                gamma0: 10.0,
                tau: 10.0,
                beta_fixed: true,
            },
        )
    }
}
