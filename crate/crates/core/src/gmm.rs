//! Gaussian mixture densities, classical energies, log-likelihood and the
//! weighted parameter update shared by every estimator.
//!
//! Everything is evaluated in log space. The classical energy of point `y`
//! under component `k` is
//!
//! ```text
//! h_k(y) = -ln(pi_k) - ln g(y; mu_k, Sigma_k)
//! ```
//!
//! so that posteriors are `softmax(-h)` and the per-point likelihood is
//! `logsumexp(-h)`.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ridge added to every covariance after an update.
pub const DEFAULT_COV_FLOOR: f64 = 1e-6;

/// A component whose total responsibility falls below `N * EMPTY_MASS_FRACTION`
/// is considered empty.
pub const EMPTY_MASS_FRACTION: f64 = 1e-12;

const WEIGHT_SUM_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;
const ROW_SUM_TOL: f64 = 1e-10;

/// One weighted Gaussian of a mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComponentRepr", into = "ComponentRepr")]
pub struct GaussianComponent {
    weight: f64,
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentRepr {
    weight: f64,
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
}

impl TryFrom<ComponentRepr> for GaussianComponent {
    type Error = Error;

    fn try_from(repr: ComponentRepr) -> Result<Self> {
        let d = repr.mean.len();
        if repr.covariance.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: repr.covariance.len(),
            });
        }
        for row in &repr.covariance {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
        }
        let cov = DMatrix::from_fn(d, d, |i, j| repr.covariance[i][j]);
        GaussianComponent::new(repr.weight, DVector::from_vec(repr.mean), cov)
    }
}

impl From<GaussianComponent> for ComponentRepr {
    fn from(c: GaussianComponent) -> Self {
        let d = c.dim();
        ComponentRepr {
            weight: c.weight,
            mean: c.mean.iter().copied().collect(),
            covariance: (0..d)
                .map(|i| (0..d).map(|j| c.covariance[(i, j)]).collect())
                .collect(),
        }
    }
}

impl GaussianComponent {
    /// Validates that the weight lies in (0, 1] and the covariance is a
    /// symmetric positive-definite matrix matching the mean's dimension.
    pub fn new(weight: f64, mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::EmptyInput("component mean"));
        }
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: covariance.nrows(),
            });
        }
        if !(weight > 0.0 && weight <= 1.0 + WEIGHT_SUM_TOL) {
            return Err(Error::InvalidWeight {
                component: 0,
                weight,
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite mean".into()));
        }
        let asym = max_asymmetry(&covariance);
        if !(asym <= SYMMETRY_TOL * (1.0 + covariance.amax())) {
            return Err(Error::Asymmetric(asym));
        }
        if Cholesky::new(covariance.clone()).is_none() {
            return Err(Error::SingularCovariance("component covariance".into()));
        }
        Ok(Self {
            weight,
            mean,
            covariance,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Full parameter set of a K-component mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureRepr", into = "MixtureRepr")]
pub struct MixtureParams {
    components: Vec<GaussianComponent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureRepr {
    components: Vec<GaussianComponent>,
}

impl TryFrom<MixtureRepr> for MixtureParams {
    type Error = Error;

    fn try_from(repr: MixtureRepr) -> Result<Self> {
        MixtureParams::new(repr.components)
    }
}

impl From<MixtureParams> for MixtureRepr {
    fn from(p: MixtureParams) -> Self {
        MixtureRepr {
            components: p.components,
        }
    }
}

impl MixtureParams {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or(Error::EmptyInput("mixture components"))?;
        let d = first.dim();
        for c in &components {
            if c.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: c.dim(),
                });
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightsNotNormalized(total));
        }
        Ok(Self { components })
    }

    /// Builds a mixture from parallel slices of weights, means and covariances.
    pub fn from_parts(
        weights: &[f64],
        means: &[DVector<f64>],
        covariances: &[DMatrix<f64>],
    ) -> Result<Self> {
        if weights.len() != means.len() || weights.len() != covariances.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: means.len(),
            });
        }
        let components = weights
            .iter()
            .zip(means)
            .zip(covariances)
            .enumerate()
            .map(|(k, ((&w, m), c))| {
                GaussianComponent::new(w, m.clone(), c.clone()).map_err(|e| match e {
                    Error::InvalidWeight { weight, .. } => Error::InvalidWeight {
                        component: k,
                        weight,
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn means(&self) -> Vec<DVector<f64>> {
        self.components.iter().map(|c| c.mean.clone()).collect()
    }

    /// Returns a copy with the components reordered so that output `k` is
    /// input `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: order.len(),
            });
        }
        Self::new(order.iter().map(|&k| self.components[k].clone()).collect())
    }

    /// Returns a copy with the means replaced.
    pub fn with_means(&self, means: &[DVector<f64>]) -> Result<Self> {
        if means.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: means.len(),
            });
        }
        let components = self
            .components
            .iter()
            .zip(means)
            .map(|(c, m)| {
                if m.len() != c.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: c.dim(),
                        found: m.len(),
                    });
                }
                Ok(GaussianComponent {
                    weight: c.weight,
                    mean: m.clone(),
                    covariance: c.covariance.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    /// Largest elementwise difference over all weights, means and covariances.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len());
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| {
                let dw = (a.weight - b.weight).abs();
                let dm = (&a.mean - &b.mean).amax();
                let dc = (&a.covariance - &b.covariance).amax();
                dw.max(dm).max(dc)
            })
            .fold(0.0, f64::max)
    }
}

/// Observed points with optional generative ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<DVector<f64>>,
    pub ground_truth: Option<MixtureParams>,
    /// Zero-based generating component of each point.
    pub labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self> {
        let d = points.first().ok_or(Error::EmptyInput("dataset"))?.len();
        if d == 0 {
            return Err(Error::EmptyInput("point dimension"));
        }
        for p in &points {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.len(),
                });
            }
        }
        Ok(Self {
            points,
            ground_truth: None,
            labels: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| DVector::from_column_slice(r)).collect())
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::DimensionMismatch {
                expected: self.points.len(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Sample mean and biased (1/N) sample covariance.
    pub fn mean_and_covariance(&self) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.len() as f64;
        let d = self.dim();
        let mut mean = DVector::zeros(d);
        for p in &self.points {
            mean += p;
        }
        mean /= n;
        let mut cov = DMatrix::zeros(d, d);
        for p in &self.points {
            let diff = p - &mean;
            cov += &diff * diff.transpose();
        }
        cov /= n;
        (mean, cov)
    }

    /// Per-coordinate minimum and maximum.
    pub fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        let mut lo = self.points[0].clone();
        let mut hi = self.points[0].clone();
        for p in &self.points[1..] {
            for j in 0..p.len() {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        (lo, hi)
    }
}

/// Row-stochastic N x K matrix of component memberships.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    matrix: DMatrix<f64>,
}

impl Responsibilities {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::EmptyInput("responsibilities"));
        }
        for i in 0..matrix.nrows() {
            let row = matrix.row(i);
            if row.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has an entry outside [0, 1]"
                )));
            }
            let s = row.sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidArgument(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self { matrix })
    }

    /// Skips validation; rows are produced by normalized softmax or kernel
    /// diagonals inside the crate.
    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_points(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.matrix.ncols()
    }

    /// Column sums, the effective number of points per component.
    pub fn component_mass(&self) -> Vec<f64> {
        (0..self.matrix.ncols())
            .map(|k| self.matrix.column(k).sum())
            .collect()
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Numerically stable `ln(sum(exp(values)))`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Writes `softmax(-beta * energies)` into `out` and returns
/// `ln sum_k exp(-beta * h_k)`.
pub fn tempered_posterior_into(energies: &[f64], beta: f64, out: &mut [f64]) -> f64 {
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    for (o, &h) in out.iter_mut().zip(energies) {
        *o = (-beta * (h - min)).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    -beta * min + total.ln()
}

/// Cholesky factor and normalizing constant of one component, reused across
/// all points of an iteration.
#[derive(Debug, Clone)]
struct PreparedComponent {
    log_weight: f64,
    log_norm: f64,
    mean: DVector<f64>,
    chol: DMatrix<f64>,
}

impl PreparedComponent {
    fn new(weight: f64, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        let chol = Cholesky::new(cov.clone())
            .ok_or_else(|| {
                Error::SingularCovariance(format!("{d}x{d} covariance has no Cholesky factor"))
            })?
            .unpack();
        let log_det: f64 = 2.0 * (0..d).map(|i| chol[(i, i)].ln()).sum::<f64>();
        Ok(Self {
            log_weight: weight.ln(),
            log_norm: -0.5 * (d as f64 * (2.0 * PI).ln() + log_det),
            mean: mean.clone(),
            chol,
        })
    }

    /// Squared Mahalanobis distance via forward substitution.
    #[allow(clippy::needless_range_loop)]
    fn mahalanobis_sq(&self, y: &DVector<f64>, scratch: &mut [f64]) -> f64 {
        let d = y.len();
        let mut quad = 0.0;
        for i in 0..d {
            let mut acc = y[i] - self.mean[i];
            for j in 0..i {
                acc -= self.chol[(i, j)] * scratch[j];
            }
            let z = acc / self.chol[(i, i)];
            scratch[i] = z;
            quad += z * z;
        }
        quad
    }

    fn log_pdf(&self, y: &DVector<f64>, scratch: &mut [f64]) -> f64 {
        self.log_norm - 0.5 * self.mahalanobis_sq(y, scratch)
    }
}

/// A mixture with every component factorized, for repeated energy evaluation.
#[derive(Debug, Clone)]
pub struct PreparedMixture {
    components: Vec<PreparedComponent>,
    dim: usize,
}

impl PreparedMixture {
    pub fn new(params: &MixtureParams) -> Result<Self> {
        let components = params
            .components()
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if c.weight <= 0.0 {
                    return Err(Error::InvalidWeight {
                        component: k,
                        weight: c.weight,
                    });
                }
                PreparedComponent::new(c.weight, &c.mean, &c.covariance)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            components,
            dim: params.dim(),
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Fills `out` with the classical energies of `y`.
    pub fn energies_into(&self, y: &DVector<f64>, out: &mut [f64]) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: y.len(),
            });
        }
        let mut scratch = [0.0f64; 8];
        let mut heap;
        let scratch: &mut [f64] = if self.dim <= scratch.len() {
            &mut scratch[..self.dim]
        } else {
            heap = vec![0.0; self.dim];
            &mut heap
        };
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = -c.log_weight - c.log_pdf(y, scratch);
        }
        Ok(())
    }
}

/// `ln g(y; mean, covariance)` evaluated without leaving log space.
pub fn log_gaussian_pdf(
    y: &DVector<f64>,
    mean: &DVector<f64>,
    covariance: &DMatrix<f64>,
) -> Result<f64> {
    if y.len() != mean.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            found: y.len(),
        });
    }
    if covariance.nrows() != mean.len() || covariance.ncols() != mean.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            found: covariance.nrows(),
        });
    }
    let prepared = PreparedComponent::new(1.0, mean, covariance)?;
    let mut scratch = vec![0.0; y.len()];
    Ok(prepared.log_pdf(y, &mut scratch))
}

/// Classical energies `h_k = -ln(pi_k g(y; mu_k, Sigma_k))` for every component.
pub fn classical_energies(y: &DVector<f64>, params: &MixtureParams) -> Result<DVector<f64>> {
    let prepared = PreparedMixture::new(params)?;
    let mut out = DVector::zeros(params.len());
    prepared.energies_into(y, out.as_mut_slice())?;
    Ok(out)
}

/// Classical E-step posterior for a single point.
pub fn em_posterior(y: &DVector<f64>, params: &MixtureParams) -> Result<DVector<f64>> {
    let h = classical_energies(y, params)?;
    let mut out = DVector::zeros(h.len());
    tempered_posterior_into(h.as_slice(), 1.0, out.as_mut_slice());
    Ok(out)
}

/// Log-likelihood of the whole dataset, one log-sum-exp per point.
pub fn log_likelihood(data: &Dataset, params: &MixtureParams) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    if data.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: data.dim(),
        });
    }
    let prepared = PreparedMixture::new(params)?;
    let mut h = vec![0.0; params.len()];
    let mut total = 0.0;
    for y in data.points() {
        prepared.energies_into(y, &mut h)?;
        for v in h.iter_mut() {
            *v = -*v;
        }
        total += log_sum_exp(&h);
    }
    Ok(total)
}

/// Responsibility-weighted count, mean and scatter (about that mean) of one
/// component. `None` when the component's mass is below the emptiness floor.
pub fn weighted_component_stats(
    data: &Dataset,
    resp: &Responsibilities,
    component: usize,
) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
    let d = data.dim();
    let column = resp.matrix().column(component);
    let mass: f64 = column.sum();
    if !(mass >= data.len() as f64 * EMPTY_MASS_FRACTION) {
        return None;
    }
    let mut mean = DVector::zeros(d);
    for (y, &r) in data.points().iter().zip(column.iter()) {
        mean.axpy(r, y, 1.0);
    }
    mean /= mass;
    let mut scatter = DMatrix::zeros(d, d);
    let mut diff = DVector::zeros(d);
    for (y, &r) in data.points().iter().zip(column.iter()) {
        diff.copy_from(y);
        diff -= &mean;
        scatter.ger(r, &diff, &diff, 1.0);
    }
    scatter /= mass;
    Some((mass, mean, scatter))
}

fn check_shapes(data: &Dataset, resp: &Responsibilities) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    if resp.n_points() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            found: resp.n_points(),
        });
    }
    Ok(())
}

/// Weighted maximum-likelihood update of all weights, means and covariances.
///
/// Covariances are the weighted scatter about the new means, symmetrized and
/// floored by `cov_floor * I`.
pub fn m_step(data: &Dataset, resp: &Responsibilities, cov_floor: f64) -> Result<MixtureParams> {
    check_shapes(data, resp)?;
    let d = data.dim();
    let k = resp.n_components();
    let mut stats = Vec::with_capacity(k);
    for c in 0..k {
        match weighted_component_stats(data, resp, c) {
            Some(s) => stats.push(s),
            None => {
                return Err(Error::EmptyComponent {
                    component: c,
                    mass: resp.matrix().column(c).sum(),
                })
            }
        }
    }
    let total: f64 = stats.iter().map(|s| s.0).sum();
    let mut components = Vec::with_capacity(k);
    for (mass, mean, scatter) in stats {
        let mut cov = (&scatter + scatter.transpose()) * 0.5;
        for i in 0..d {
            cov[(i, i)] += cov_floor;
        }
        components.push(GaussianComponent {
            weight: mass / total,
            mean,
            covariance: cov,
        });
    }
    Ok(MixtureParams { components })
}

/// Update of the means only; weights and covariances are copied from `frozen`.
pub fn m_step_means_only(
    data: &Dataset,
    resp: &Responsibilities,
    frozen: &MixtureParams,
) -> Result<MixtureParams> {
    check_shapes(data, resp)?;
    if resp.n_components() != frozen.len() {
        return Err(Error::DimensionMismatch {
            expected: frozen.len(),
            found: resp.n_components(),
        });
    }
    let means = (0..frozen.len())
        .map(|c| {
            weighted_component_stats(data, resp, c)
                .map(|(_, mean, _)| mean)
                .ok_or(Error::EmptyComponent {
                    component: c,
                    mass: resp.matrix().column(c).sum(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    frozen.with_means(&means)
}

/// Classical responsibilities for every point, tempered by `beta`. Also
/// returns `sum_i ln sum_k exp(-beta h_ik)`.
pub fn tempered_responsibilities(
    data: &Dataset,
    params: &MixtureParams,
    beta: f64,
) -> Result<(Responsibilities, f64)> {
    let prepared = PreparedMixture::new(params)?;
    let k = params.len();
    let mut matrix = DMatrix::zeros(data.len(), k);
    let mut h = vec![0.0; k];
    let mut row = vec![0.0; k];
    let mut log_z = 0.0;
    for (i, y) in data.points().iter().enumerate() {
        prepared.energies_into(y, &mut h)?;
        log_z += tempered_posterior_into(&h, beta, &mut row);
        for (j, &r) in row.iter().enumerate() {
            matrix[(i, j)] = r;
        }
    }
    Ok((Responsibilities::from_matrix_unchecked(matrix), log_z))
}
