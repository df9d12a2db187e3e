//! Library results against straightforward reference computations.

use dqaem::experiments::{generate_dataset, GeneratorSpec};
use dqaem::gmm::{log_likelihood, m_step, tempered_responsibilities};
use dqaem::kernel::{annealed_responsibilities, negative_free_energy, ring_coupling};
use dqaem::{Dataset, MixtureParams, Responsibilities};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn spec(rng: &mut ChaCha8Rng, k: usize, d: usize, n: usize) -> GeneratorSpec {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.3..1.0)).collect();
    let s: f64 = raw.iter().sum();
    GeneratorSpec {
        weights: raw.iter().map(|w| w / s).collect(),
        means: (0..k)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect(),
        covariances: (0..k)
            .map(|_| {
                let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.7..0.7));
                let m = &a * a.transpose() + DMatrix::identity(d, d) * 0.5;
                (0..d)
                    .map(|i| (0..d).map(|j| m[(i, j)]).collect())
                    .collect()
            })
            .collect(),
        n,
        seed: rng.random(),
    }
}

fn instance(seed: u64) -> (Dataset, MixtureParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..=5);
    let d = rng.random_range(1..=3);
    let n = rng.random_range(10..=50);
    let data = generate_dataset(&spec(&mut rng, k, d, n)).unwrap();
    let kt = rng.random_range(2..=5);
    let theta = spec(&mut rng, kt, d, kt).mixture().unwrap();
    (data, theta)
}

/// Density from the textbook formula with an explicit inverse and determinant.
fn density(y: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let d = y.len() as f64;
    let diff = y - mean;
    let q = (diff.transpose() * cov.clone().try_inverse().unwrap() * &diff)[(0, 0)];
    (-0.5 * q).exp() / ((2.0 * PI).powf(d) * cov.determinant()).sqrt()
}

fn energies(y: &DVector<f64>, theta: &MixtureParams) -> Vec<f64> {
    theta
        .components()
        .iter()
        .map(|c| -(c.weight() * density(y, c.mean(), c.covariance())).ln())
        .collect()
}

fn taylor_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.abs().row_sum().max();
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let scaled = a / 2f64.powi(s);
    let n = a.nrows();
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for j in 1..=30 {
        term = &term * &scaled / j as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Dense `K x K` ring with explicit neighbour bookkeeping.
fn ring_oracle(k: usize) -> DMatrix<f64> {
    let mut r = DMatrix::zeros(k, k);
    for col in 0..k {
        r[((col + 1) % k, col)] += 1.0;
        r[((col + k - 1) % k, col)] += 1.0;
    }
    r
}

#[test]
fn log_likelihood_matches_double_sum() {
    for seed in 0..40 {
        let (data, theta) = instance(seed);
        let naive: f64 = data
            .points()
            .iter()
            .map(|y| {
                theta
                    .components()
                    .iter()
                    .map(|c| c.weight() * density(y, c.mean(), c.covariance()))
                    .sum::<f64>()
                    .ln()
            })
            .sum();
        let ll = log_likelihood(&data, &theta).unwrap();
        assert!(
            (ll - naive).abs() <= 1e-9 * naive.abs().max(1.0),
            "seed {seed}: {ll} vs {naive}"
        );
    }
}

#[test]
fn m_step_matches_weighted_averages() {
    for seed in 0..30 {
        let (data, theta) = instance(seed);
        let (resp, _) = tempered_responsibilities(&data, &theta, 1.0).unwrap();
        let floor = 1e-6;
        let Ok(next) = m_step(&data, &resp, floor) else {
            continue;
        };
        let n = data.len();
        let d = data.dim();
        for (k, comp) in next.components().iter().enumerate() {
            let r: Vec<f64> = (0..n).map(|i| resp.matrix()[(i, k)]).collect();
            let nk: f64 = r.iter().sum();
            let mut mean = DVector::zeros(d);
            for (y, w) in data.points().iter().zip(&r) {
                mean += y * *w;
            }
            mean /= nk;
            let mut cov = DMatrix::zeros(d, d);
            for (y, w) in data.points().iter().zip(&r) {
                let e = y - &mean;
                cov += &e * e.transpose() * *w;
            }
            cov /= nk;
            cov += DMatrix::identity(d, d) * floor;
            assert!((comp.weight() - nk / n as f64).abs() < 1e-12);
            assert!((comp.mean() - &mean).amax() < 1e-12, "seed {seed} mean");
            assert!(
                (comp.covariance() - &cov).amax() < 1e-12,
                "seed {seed} covariance"
            );
        }
    }
}

#[test]
fn ring_matches_neighbour_counts() {
    for k in 2..=9 {
        assert_eq!(ring_coupling(k).unwrap(), ring_oracle(k), "K = {k}");
    }
}

#[test]
fn quantum_quantities_match_series_exponential() {
    for seed in 0..30 {
        let (data, theta) = instance(seed);
        let k = theta.len();
        let ring = ring_oracle(k);
        for &(beta, gamma) in &[(1.0, 0.5), (0.8, 1.2), (1.3, 3.0)] {
            let mut free = 0.0;
            let mut expected = DMatrix::zeros(data.len(), k);
            for (i, y) in data.points().iter().enumerate() {
                let h = DMatrix::from_diagonal(&DVector::from_vec(energies(y, &theta)));
                let f = taylor_exp(&((h + &ring * gamma) * -beta));
                let tr = f.trace();
                free += tr.ln() / beta;
                for j in 0..k {
                    expected[(i, j)] = f[(j, j)] / tr;
                }
            }
            let g = negative_free_energy(&data, &theta, beta, gamma).unwrap();
            assert!(
                (g - free).abs() <= 1e-8 * free.abs().max(1.0),
                "seed {seed}: {g} vs {free}"
            );
            let (resp, g2): (Responsibilities, f64) =
                annealed_responsibilities(&data, &theta, beta, gamma).unwrap();
            assert!((g2 - g).abs() <= 1e-12 * g.abs().max(1.0));
            assert!(
                (resp.matrix() - &expected).amax() < 1e-8,
                "seed {seed} responsibilities"
            );
        }
    }
}
