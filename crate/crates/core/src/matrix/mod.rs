//! Dense Hermitian matrices, density matrices and their spectral toolkit.

mod project;
mod random;
mod spectral;
pub mod text;

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub use project::{project_rank_k_state_space, project_simplex, project_state_space};
pub use random::{random_rank_k_state, random_real_rank_k_state, state_from_weights};
pub(crate) use random::haar_columns;
pub use spectral::SpectralDecomposition;

pub type CMatrix = DMatrix<Complex64>;

/// A `d x d` complex Hermitian matrix.
///
/// Construction either checks Hermiticity ([`HermitianMatrix::new`]) or
/// symmetrizes (`(M + M†)/2`), so the stored entries are exactly Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    data: CMatrix,
}

impl HermitianMatrix {
    /// Wraps `m` after checking `|m_ij - conj(m_ji)| <= 1e-12 * max(1, max|m|)`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), actual: m.ncols() });
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut deviation = 0.0f64;
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                deviation = deviation.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if deviation > tol::HERMITIAN * scale {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::hermitize(m))
    }

    /// Returns `(M + M†)/2`.
    pub fn hermitize(m: CMatrix) -> Self {
        assert!(m.is_square(), "hermitize needs a square matrix");
        let adj = m.adjoint();
        let mut data = (m + adj) * Complex64::new(0.5, 0.0);
        for i in 0..data.nrows() {
            data[(i, i)].im = 0.0;
        }
        Self { data }
    }

    pub fn zeros(d: usize) -> Self {
        Self { data: CMatrix::zeros(d, d) }
    }

    pub fn identity(d: usize) -> Self {
        Self { data: CMatrix::identity(d, d) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut data = CMatrix::zeros(d, d);
        for (i, &v) in diag.iter().enumerate() {
            data[(i, i)] = Complex64::new(v, 0.0);
        }
        Self { data }
    }

    /// Builds a real symmetric matrix from row-major entries, symmetrizing.
    pub fn from_real_rows(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::LengthMismatch { expected: d * d, actual: entries.len() });
        }
        let m = CMatrix::from_fn(d, d, |r, c| Complex64::new(entries[r * d + c], 0.0));
        Self::new(m)
    }

    /// `sum_j w_j v_j v_j†` for columns `v_j` of `vectors`.
    pub fn from_weighted_projectors(vectors: &CMatrix, weights: &[f64]) -> Self {
        let d = vectors.nrows();
        let mut data = CMatrix::zeros(d, d);
        for (j, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let v = vectors.column(j);
            data += (v * v.adjoint()) * Complex64::new(w, 0.0);
        }
        Self::hermitize(data)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[(r, c)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Largest imaginary part of any entry.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Real Frobenius inner product `Re tr(A† B)`; exact for Hermitian pairs.
    pub fn inner(&self, other: &Self) -> f64 {
        self.data.iter().zip(other.data.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// `tr(A B)` for a general complex matrix `B`.
    pub fn trace_product(&self, other: &CMatrix) -> Complex64 {
        let d = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..d {
            for c in 0..d {
                acc += self.data[(r, c)] * other[(c, r)];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Sum of absolute eigenvalues.
    pub fn nuclear_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|l| l.abs()).sum()
    }

    /// Largest absolute eigenvalue.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|l| l.abs()).fold(0.0, f64::max)
    }

    /// Eigenvalues, sorted non-increasing.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().expect("Hermitian eigensolver failed").eigenvalues
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { data: &self.data * Complex64::new(s, 0.0) }
    }

    pub fn dist_frobenius(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn dist_nuclear(&self, other: &Self) -> f64 {
        (self - other).nuclear_norm()
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: self.dim() });
        }
        Ok(())
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { data: &self.data + &rhs.data }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { data: &self.data - &rhs.data }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scaled(rhs)
    }
}

/// A density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    base: HermitianMatrix,
}

impl QuantumState {
    pub fn new(base: HermitianMatrix) -> Result<Self> {
        let tr = base.trace();
        if (tr - 1.0).abs() > tol::TRACE {
            return Err(Error::InvalidParameter(format!("trace {tr} is not 1")));
        }
        let min = base.eigenvalues().last().copied().unwrap_or(0.0);
        if min < -tol::PSD {
            return Err(Error::InvalidParameter(format!("smallest eigenvalue {min:e} is negative")));
        }
        Ok(Self { base })
    }

    pub(crate) fn new_unchecked(base: HermitianMatrix) -> Self {
        Self { base }
    }

    /// The maximally mixed state `I/d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self { base: HermitianMatrix::identity(d).scaled(1.0 / d as f64) }
    }

    /// The pure state `|e_j><e_j|`.
    pub fn basis_state(d: usize, j: usize) -> Self {
        let mut diag = vec![0.0; d];
        diag[j] = 1.0;
        Self { base: HermitianMatrix::from_real_diagonal(&diag) }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.base
    }

    pub fn into_matrix(self) -> HermitianMatrix {
        self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.base.frobenius_norm_sq()
    }
}

impl AsRef<HermitianMatrix> for QuantumState {
    fn as_ref(&self) -> &HermitianMatrix {
        &self.base
    }
}
