use std::path::Path;

use dqaem::estimator::{
    bounding_box_init_with, fit as run_estimator, AnnealingSchedule, EstimatorConfig, DEFAULT_TAU,
};
use dqaem::experiments::{
    barrier, generate_dataset, landscape, run_benchmark, BenchmarkReport, BenchmarkSettings,
    BoundingBoxInit, GeneratorSpec, GridAxis, ParamSelector, BENCHMARK_INIT_VARIANCE,
};
use dqaem::kernel::{quantum_weight, trotter_diagonal};
use dqaem::seeding::{derive_seed, STREAM_INIT};
use dqaem::{FitResult, InitCovariance, MixtureParams, Mode, UpdateScope};
use nalgebra::DVector;
use serde::Serialize;

use crate::args::{BenchmarkArgs, Cli, Command, FitArgs, GenDataArgs, LandscapeArgs, TrotterArgs};
use crate::config::{parse_field, RunConfigFile};
use crate::error::{CliError, CliResult};
use crate::io::{read_dataset_csv, read_json, write_dataset_csv, write_json, write_text};

const DEFAULT_COMPONENTS: usize = 7;

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Fit(a) => fit(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Landscape(a) => landscape_cmd(a),
        Command::TrotterCheck(a) => trotter_check(a),
    }
}

#[derive(Serialize)]
struct TruthBody<'a> {
    generator: &'a GeneratorSpec,
    params: MixtureParams,
}

fn gen_data(a: GenDataArgs) -> CliResult<()> {
    let cfg = RunConfigFile::load(a.common.config.as_deref())?.data;
    let n = a.n.or(cfg.n);
    let seed = a.seed.or(cfg.seed);
    let spec = match (cfg.weights, cfg.means, cfg.covariances) {
        (Some(weights), Some(means), Some(covariances)) if a.k.is_none() && a.d.is_none() => {
            GeneratorSpec {
                weights,
                means,
                covariances,
                n: n.unwrap_or(700),
                seed: seed.unwrap_or(1),
            }
        }
        (None, None, None) => {
            let k = a.k.or(cfg.k).unwrap_or(DEFAULT_COMPONENTS);
            let d = a.d.or(cfg.d).unwrap_or(2);
            if k == 0 || d == 0 {
                return Err(CliError::Usage("--k and --d must be positive".into()));
            }
            GeneratorSpec::ring(k, d, n.unwrap_or(100 * k), seed.unwrap_or(1))
        }
        _ => return Err(CliError::Usage(
            "an explicit [data] spec needs weights, means and covariances, and excludes --k/--d"
                .into(),
        )),
    };
    let data = generate_dataset(&spec)?;
    write_dataset_csv(&a.output, &data)?;
    let truth_path = a
        .truth
        .unwrap_or_else(|| a.output.with_extension("truth.json"));
    let body = TruthBody {
        generator: &spec,
        params: spec.mixture()?,
    };
    write_json(&truth_path, "ground-truth", body, !a.common.no_timestamp)
}

/// Parameters from a bare params file, a ground-truth file or a fit result.
fn read_params(path: &Path) -> CliResult<MixtureParams> {
    let value: serde_json::Value = read_json(path)?;
    let inner = if value.get("components").is_some() {
        value
    } else if let Some(p) = value.get("params") {
        p.clone()
    } else if let Some(p) = value.pointer("/result/final_params") {
        p.clone()
    } else {
        return Err(CliError::input(path, "no mixture parameters found"));
    };
    serde_json::from_value(inner).map_err(|e| CliError::input(path, e))
}

#[derive(Serialize)]
struct FitBody<'a> {
    input: &'a Path,
    config: &'a EstimatorConfig,
    scope: UpdateScope,
    init: &'a MixtureParams,
    result: &'a FitResult,
}

fn fit(a: FitArgs) -> CliResult<()> {
    let cfg = RunConfigFile::load(a.common.config.as_deref())?.estimator;
    let s = &a.schedule;
    let mode = s.mode.or(cfg.mode).unwrap_or(Mode::Em);
    let schedule = AnnealingSchedule::new(
        s.beta0.or(cfg.beta0).unwrap_or(1.0),
        s.gamma0.or(cfg.gamma0).unwrap_or(0.0),
        s.tau.or(cfg.tau).unwrap_or(DEFAULT_TAU),
        s.beta_fixed || cfg.beta_fixed.unwrap_or(false),
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let mut config = EstimatorConfig::new(mode, schedule).with_seed(seed);
    if let Some(n) = s.max_iters.or(cfg.max_iters) {
        config = config.with_max_iterations(n);
    }
    if let Some(t) = s.tol.or(cfg.tol) {
        config = config.with_tolerance(t);
    }
    if let Some(p) = cfg.empty_component {
        config = config.with_policy(p);
    }
    if let Some(f) = cfg.cov_floor {
        config.cov_floor = f;
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let data = read_dataset_csv(&a.input)?;
    let init = match &a.init {
        Some(path) => read_params(path)?,
        None => {
            let k = a.k.or(cfg.components).unwrap_or(DEFAULT_COMPONENTS);
            let cov = match (a.init_var, &cfg.init_variance) {
                (Some(c), _) => c,
                (None, Some(v)) => v.resolve()?,
                (None, None) => InitCovariance::Global,
            };
            bounding_box_init_with(&data, k, derive_seed(seed, STREAM_INIT, 0), cov)
                .map_err(|e| CliError::Usage(e.to_string()))?
        }
    };
    if init.dim() != data.dim() {
        return Err(CliError::Usage(format!(
            "initial parameters have dimension {}, data {}",
            init.dim(),
            data.dim()
        )));
    }
    let scope = if a.means_only || cfg.means_only.unwrap_or(false) {
        UpdateScope::MeansOnly
    } else {
        UpdateScope::Full
    };
    let result = run_estimator(&data, &init, &config, scope)?;
    let body = FitBody {
        input: &a.input,
        config: &config,
        scope,
        init: &init,
        result: &result,
    };
    write_json(&a.output, "fit", body, !a.common.no_timestamp)?;
    println!(
        "{}: {} iterations, converged {}, final objective {}",
        mode,
        result.iterations,
        result.converged,
        result.objective_history.last().copied().unwrap_or(f64::NAN)
    );
    match &result.failure_reason {
        Some(reason) => Err(CliError::Numerical(format!(
            "fit stopped early: {reason:?}"
        ))),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct BenchmarkBody<'a> {
    input: &'a Path,
    components: usize,
    init_covariance: InitCovariance,
    report: &'a BenchmarkReport,
}

fn benchmark(a: BenchmarkArgs) -> CliResult<()> {
    let cfg = RunConfigFile::load(a.common.config.as_deref())?.benchmark;
    let modes = a
        .modes
        .or(cfg.modes)
        .unwrap_or_else(|| vec![Mode::Em, Mode::Dsaem, Mode::Dqaem]);
    if modes.is_empty() {
        return Err(CliError::Usage(
            "--modes must name at least one estimator".into(),
        ));
    }
    let tau = a.tau.or(cfg.tau).unwrap_or(DEFAULT_TAU);
    let beta0 = a.beta0.or(cfg.dsaem_beta0).unwrap_or(0.7);
    let gamma0 = a.gamma0.or(cfg.dqaem_gamma0).unwrap_or(1.2);
    let max_iters = a.max_iters.or(cfg.max_iters);
    let tol = a.tol.or(cfg.tol);
    let configs = modes
        .iter()
        .map(|&mode| {
            let schedule = match mode {
                Mode::Em => AnnealingSchedule::new(1.0, 0.0, tau, true),
                Mode::Dsaem => AnnealingSchedule::new(beta0, 0.0, tau, false),
                Mode::Dqaem => AnnealingSchedule::new(1.0, gamma0, tau, true),
            }?;
            let mut c = EstimatorConfig::new(mode, schedule);
            if let Some(n) = max_iters {
                c = c.with_max_iterations(n);
            }
            if let Some(t) = tol {
                c = c.with_tolerance(t);
            }
            c.validate().map(|_| c)
        })
        .collect::<dqaem::Result<Vec<_>>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let trials = a.trials.or(cfg.trials).unwrap_or(300);
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let threshold = a.threshold.or(cfg.threshold).unwrap_or(1.0);
    if threshold.is_nan() || threshold < 0.0 {
        return Err(CliError::Usage(format!(
            "--threshold must be >= 0, got {threshold}"
        )));
    }
    let jobs = a.jobs.or(cfg.jobs);
    if jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let settings = BenchmarkSettings {
        trials,
        seed: a.seed.or(cfg.seed).unwrap_or(0),
        success_threshold: threshold,
        jobs,
    };
    let components = a.k.or(cfg.components).unwrap_or(DEFAULT_COMPONENTS);
    let covariance = match (a.init_var, &cfg.init_variance) {
        (Some(c), _) => c,
        (None, Some(v)) => v.resolve()?,
        (None, None) => InitCovariance::Isotropic(BENCHMARK_INIT_VARIANCE),
    };
    if components == 0 {
        return Err(CliError::Usage("--k must be positive".into()));
    }

    let data = read_dataset_csv(&a.input)?;
    let sampler = BoundingBoxInit {
        components,
        covariance,
    };
    let report = run_benchmark(&data, &configs, &settings, &sampler)?;
    let body = BenchmarkBody {
        input: &a.input,
        components,
        init_covariance: covariance,
        report: &report,
    };
    write_json(&a.output, "benchmark", body, !a.common.no_timestamp)?;
    let table = report.table();
    print!("{table}");
    if let Some(path) = &a.table {
        write_text(path, &table)?;
    }
    Ok(())
}

fn landscape_cmd(a: LandscapeArgs) -> CliResult<()> {
    let cfg = RunConfigFile::load(a.common.config.as_deref())?.grid;
    let (data, base) = match (&a.input, &a.params) {
        (Some(input), Some(params)) => (read_dataset_csv(input)?, read_params(params)?),
        (None, None) => (barrier::dataset()?, barrier::init()),
        _ => {
            return Err(CliError::Usage(
                "--input and --params must be given together".into(),
            ))
        }
    };
    let (default_x, default_y) = barrier::selectors();
    let (default_xr, default_yr) = barrier::axes();
    let x: ParamSelector = a.x.or(parse_field(&cfg.x, "grid.x")?).unwrap_or(default_x);
    let y: ParamSelector = a.y.or(parse_field(&cfg.y, "grid.y")?).unwrap_or(default_y);
    let xr: GridAxis = a
        .x_range
        .or(parse_field(&cfg.x_range, "grid.x_range")?)
        .unwrap_or(default_xr);
    let yr: GridAxis = a
        .y_range
        .or(parse_field(&cfg.y_range, "grid.y_range")?)
        .unwrap_or(default_yr);
    let beta = a.beta.or(cfg.beta).unwrap_or(1.0);
    let gamma = a.gamma.or(cfg.gamma).unwrap_or(0.0);
    if !(beta > 0.0) || !(gamma >= 0.0) {
        return Err(CliError::Usage(format!(
            "need beta > 0 and gamma >= 0, got {beta}, {gamma}"
        )));
    }
    let grid = landscape(&data, &base, (x, y), (xr, yr), beta, gamma).map_err(|e| match e {
        dqaem::Error::InvalidArgument(_)
        | dqaem::Error::DimensionMismatch { .. }
        | dqaem::Error::EmptyInput(_) => CliError::Usage(e.to_string()),
        other => CliError::Model(other),
    })?;

    let mut out = String::from("x,y,objective\n");
    for (i, a1) in grid.axis1.iter().enumerate() {
        for (j, a2) in grid.axis2.iter().enumerate() {
            out.push_str(&format!("{a1},{a2},{}\n", grid.values[i][j]));
        }
    }
    write_text(&a.output, &out)?;
    let maxima = grid.local_maxima();
    let points: Vec<(f64, f64)> = maxima
        .iter()
        .map(|&(i, j)| (grid.axis1[i], grid.axis2[j]))
        .collect();
    println!("{} strict local maxima at {:?}", maxima.len(), points);
    Ok(())
}

fn trotter_check(a: TrotterArgs) -> CliResult<()> {
    let cfg = RunConfigFile::load(a.common.config.as_deref())?.trotter;
    let energies = a
        .energies
        .or(cfg.energies)
        .unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let beta = a.beta.or(cfg.beta).unwrap_or(1.0);
    let gamma = a.gamma.or(cfg.gamma).unwrap_or(0.8);
    let slices = a
        .slices
        .or(cfg.slices)
        .unwrap_or_else(|| vec![16, 64, 256, 1024]);
    if energies.len() < 2 || slices.is_empty() || slices.contains(&0) {
        return Err(CliError::Usage(
            "need at least two energies and positive slice counts".into(),
        ));
    }
    let h = DVector::from_vec(energies);
    let exact = quantum_weight(&h, beta, gamma)?.unshifted_diagonal(beta);
    let mut out = String::from("slices,max_abs_error,ratio_to_previous\n");
    let mut previous: Option<f64> = None;
    for &m in &slices {
        let err = (trotter_diagonal(&h, beta, gamma, m)? - &exact).amax();
        let ratio = previous.map(|p| (p / err).to_string()).unwrap_or_default();
        out.push_str(&format!("{m},{err},{ratio}\n"));
        println!("M = {m:>6}  error {err:.6e}  {ratio}");
        previous = Some(err);
    }
    write_text(&a.output, &out)
}
