//! Quantum exponential weights over the hidden component label.
//!
//! For one data point with classical energies `h`, the label space is a
//! K-dimensional state space and the weight is the matrix
//!
//! ```text
//! f = exp(-beta * (diag(h) + gamma * R))
//! ```
//!
//! where `R` is the ring coupling between neighbouring labels. The normalized
//! diagonal of `f` replaces the classical posterior, and `(1/beta) ln Tr f`
//! summed over points is the negative free energy. With `gamma = 0` the
//! weight is diagonal and everything reduces to tempered classical EM.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::gmm::{
    tempered_posterior_into, Dataset, MixtureParams, PreparedMixture, Responsibilities,
};

const SYMMETRY_TOL: f64 = 1e-10;
/// Largest exponent that still fits in an f64.
const MAX_EXPONENT: f64 = 709.0;

/// Ring coupling between labels: entry `(l, k)` counts how many of the two
/// ring neighbours `k - 1`, `k + 1` (mod K) equal `l`.
///
/// For K = 2 both neighbours coincide and the off-diagonal entries are 2.
pub fn ring_coupling(order: usize) -> Result<DMatrix<f64>> {
    if order < 2 {
        return Err(Error::InvalidOrder(order));
    }
    let mut m = DMatrix::zeros(order, order);
    for k in 0..order {
        let prev = (k + order - 1) % order;
        let next = (k + 1) % order;
        m[(prev, k)] += 1.0;
        m[(next, k)] += 1.0;
    }
    Ok(m)
}

/// Diagonal classical energies plus a ring coupling of strength `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumHamiltonian {
    energies: DVector<f64>,
    gamma: f64,
}

impl QuantumHamiltonian {
    pub fn new(energies: DVector<f64>, gamma: f64) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::InvalidOrder(energies.len()));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gamma must be finite and >= 0, got {gamma}"
            )));
        }
        Ok(Self { energies, gamma })
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn order(&self) -> usize {
        self.energies.len()
    }

    /// The full symmetric matrix `diag(h) + gamma * R`.
    pub fn assemble(&self) -> DMatrix<f64> {
        let mut m = ring_coupling(self.order()).expect("order checked in new") * self.gamma;
        for (k, &h) in self.energies.iter().enumerate() {
            m[(k, k)] += h;
        }
        m
    }
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if !(worst <= SYMMETRY_TOL) {
        return Err(Error::Asymmetric(worst));
    }
    Ok(())
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// `exp(A)` for a symmetric matrix through its spectral decomposition
/// `A = Q diag(lambda) Q^T`.
pub fn matrix_exp_symmetric(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(a)?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.max();
    if max > MAX_EXPONENT {
        return Err(Error::NumericalRange {
            beta: 1.0,
            gamma: 0.0,
            spread: max - eig.eigenvalues.min(),
        });
    }
    let q = &eig.eigenvectors;
    let scaled = q * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::exp));
    let mut out = scaled * q.transpose();
    symmetrize(&mut out);
    Ok(out)
}

fn validate_temperature(beta: f64, gamma: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "beta must be finite and > 0, got {beta}"
        )));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gamma must be finite and >= 0, got {gamma}"
        )));
    }
    Ok(())
}

fn energy_spread(energies: &[f64]) -> f64 {
    let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Exponential weight of one data point.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumWeight {
    /// `exp(-beta * ((H - shift I) + gamma R))`, symmetric positive definite.
    pub matrix: DMatrix<f64>,
    /// Stability shift, the minimum classical energy.
    pub shift: f64,
    /// `ln Tr exp(-beta (H + gamma R))` with the shift added back.
    pub log_trace: f64,
    /// Normalized diagonal of the weight.
    pub responsibilities: DVector<f64>,
}

impl QuantumWeight {
    /// Trace of the unshifted weight.
    pub fn trace(&self) -> f64 {
        self.log_trace.exp()
    }

    /// Diagonal of the unshifted weight `exp(-beta (H + gamma R))`.
    pub fn unshifted_diagonal(&self, beta: f64) -> DVector<f64> {
        self.matrix.diagonal() * (-beta * self.shift).exp()
    }
}

/// Computes the full exponential weight of one point.
pub fn quantum_weight(energies: &DVector<f64>, beta: f64, gamma: f64) -> Result<QuantumWeight> {
    validate_temperature(beta, gamma)?;
    let k = energies.len();
    if k < 2 {
        return Err(Error::InvalidOrder(k));
    }
    if energies.iter().any(|h| !h.is_finite()) {
        return Err(Error::NumericalRange {
            beta,
            gamma,
            spread: energy_spread(energies.as_slice()),
        });
    }
    let shift = energies.min();
    let mut responsibilities = DVector::zeros(k);
    let (matrix, log_trace) = if gamma == 0.0 {
        let log_trace =
            tempered_posterior_into(energies.as_slice(), beta, responsibilities.as_mut_slice());
        let diag = energies.map(|h| (-beta * (h - shift)).exp());
        (DMatrix::from_diagonal(&diag), log_trace)
    } else {
        let ring = ring_coupling(k)?;
        let eig = shifted_eigen(energies.as_slice(), shift, beta, gamma, &ring);
        let max = eig.eigenvalues.max();
        if max > MAX_EXPONENT {
            return Err(Error::NumericalRange {
                beta,
                gamma,
                spread: energy_spread(energies.as_slice()),
            });
        }
        let log_trace = diagonal_from_eigen(&eig, responsibilities.as_mut_slice()) - beta * shift;
        let q = &eig.eigenvectors;
        let mut matrix =
            (q * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::exp))) * q.transpose();
        symmetrize(&mut matrix);
        (matrix, log_trace)
    };
    Ok(QuantumWeight {
        matrix,
        shift,
        log_trace,
        responsibilities,
    })
}

/// Eigendecomposition of `-beta * ((H - shift I) + gamma R)`.
fn shifted_eigen(
    energies: &[f64],
    shift: f64,
    beta: f64,
    gamma: f64,
    ring: &DMatrix<f64>,
) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let mut a = ring * (-beta * gamma);
    for (k, &h) in energies.iter().enumerate() {
        a[(k, k)] = -beta * (h - shift);
    }
    SymmetricEigen::new(a)
}

/// Writes the normalized diagonal of `exp(A)` into `out` and returns
/// `ln Tr exp(A)`, working relative to the largest eigenvalue so nothing
/// overflows.
fn diagonal_from_eigen(eig: &SymmetricEigen<f64, nalgebra::Dyn>, out: &mut [f64]) -> f64 {
    let max = eig.eigenvalues.max();
    let weights: Vec<f64> = eig.eigenvalues.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let q = &eig.eigenvectors;
    let mut sum = 0.0;
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, w) in weights.iter().enumerate() {
            let v = q[(k, j)];
            acc += v * v * w;
        }
        *o = acc;
        sum += acc;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    max + total.ln()
}

/// Normalized diagonal of the weight for one point, written into `out`;
/// returns the log trace. `ring` must be `ring_coupling(energies.len())`.
pub(crate) fn weight_diagonal_into(
    energies: &[f64],
    beta: f64,
    gamma: f64,
    ring: &DMatrix<f64>,
    out: &mut [f64],
) -> Result<f64> {
    if energies.iter().any(|h| !h.is_finite()) {
        return Err(Error::NumericalRange {
            beta,
            gamma,
            spread: energy_spread(energies),
        });
    }
    if gamma == 0.0 {
        return Ok(tempered_posterior_into(energies, beta, out));
    }
    let shift = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let eig = shifted_eigen(energies, shift, beta, gamma, ring);
    Ok(diagonal_from_eigen(&eig, out) - beta * shift)
}

fn mat_pow(base: &DMatrix<f64>, mut exp: usize) -> DMatrix<f64> {
    let n = base.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut acc = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = &result * &acc;
        }
        exp >>= 1;
        if exp > 0 {
            acc = &acc * &acc;
        }
    }
    result
}

/// Diagonal of the `slices`-fold product `[exp(-(beta/M) H) exp(-(beta/M) gamma R)]^M`
/// with periodic boundary, i.e. the discrete imaginary-time path sum. The
/// coupling factor is exponentiated exactly.
pub fn trotter_diagonal(
    energies: &DVector<f64>,
    beta: f64,
    gamma: f64,
    slices: usize,
) -> Result<DVector<f64>> {
    validate_temperature(beta, gamma)?;
    if slices == 0 {
        return Err(Error::InvalidArgument(
            "slice count must be at least 1".into(),
        ));
    }
    let k = energies.len();
    let ring = ring_coupling(k)?;
    let shift = energies.min();
    let dt = beta / slices as f64;
    let coupling = matrix_exp_symmetric(&(ring * (-dt * gamma)))?;
    let diag = energies.map(|h| (-dt * (h - shift)).exp());
    let step = DMatrix::from_diagonal(&diag) * coupling;
    let product = mat_pow(&step, slices);
    let out = product.diagonal() * (-beta * shift).exp();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalRange {
            beta,
            gamma,
            spread: energy_spread(energies.as_slice()),
        });
    }
    Ok(out)
}

/// Responsibilities of every point under `(beta, gamma)` together with the
/// negative free energy of the current parameters.
pub fn annealed_responsibilities(
    data: &Dataset,
    params: &MixtureParams,
    beta: f64,
    gamma: f64,
) -> Result<(Responsibilities, f64)> {
    validate_temperature(beta, gamma)?;
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    if data.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: data.dim(),
        });
    }
    let k = params.len();
    let ring = if gamma > 0.0 {
        ring_coupling(k)?
    } else {
        DMatrix::zeros(k, k)
    };
    let prepared = PreparedMixture::new(params)?;
    let mut matrix = DMatrix::zeros(data.len(), k);
    let mut h = vec![0.0; k];
    let mut row = vec![0.0; k];
    let mut log_z = 0.0;
    for (i, y) in data.points().iter().enumerate() {
        prepared.energies_into(y, &mut h)?;
        log_z += weight_diagonal_into(&h, beta, gamma, &ring, &mut row)?;
        for (j, &r) in row.iter().enumerate() {
            matrix[(i, j)] = r;
        }
    }
    Ok((
        Responsibilities::from_matrix_unchecked(matrix),
        log_z / beta,
    ))
}

/// Negative free energy `(1/beta) sum_i ln Tr exp(-beta (H_i + gamma R))`.
pub fn negative_free_energy(
    data: &Dataset,
    params: &MixtureParams,
    beta: f64,
    gamma: f64,
) -> Result<f64> {
    validate_temperature(beta, gamma)?;
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    if data.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: data.dim(),
        });
    }
    let k = params.len();
    let ring = if gamma > 0.0 {
        ring_coupling(k)?
    } else {
        DMatrix::zeros(k, k)
    };
    let prepared = PreparedMixture::new(params)?;
    let mut h = vec![0.0; k];
    let mut row = vec![0.0; k];
    let mut log_z = 0.0;
    for y in data.points() {
        prepared.energies_into(y, &mut h)?;
        log_z += weight_diagonal_into(&h, beta, gamma, &ring, &mut row)?;
    }
    Ok(log_z / beta)
}
