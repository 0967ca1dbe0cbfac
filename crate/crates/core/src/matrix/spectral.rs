use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::{CMatrix, HermitianMatrix};
use crate::error::{Error, Result};
use crate::tol;

/// Eigenvalues sorted non-increasing; column `j` of `eigenvectors` pairs with `eigenvalues[j]`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    /// `V diag(f(lambda)) V†`, skipping zero weights.
    pub fn reassemble_with(&self, weights: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_weighted_projectors(&self.eigenvectors, weights)
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.reassemble_with(&self.eigenvalues)
    }
}

impl HermitianMatrix {
    pub fn eigh(&self) -> Result<SpectralDecomposition> {
        let d = self.dim();
        if d == 0 {
            return Ok(SpectralDecomposition { eigenvalues: vec![], eigenvectors: CMatrix::zeros(0, 0) });
        }
        let eig = SymmetricEigen::try_new(self.as_matrix().clone(), f64::EPSILON, tol::EIGH_MAX_ITERS)
            .ok_or_else(|| {
                let m = self.as_matrix();
                let mut off = 0.0;
                for r in 0..d {
                    for c in 0..d {
                        if r != c {
                            off += m[(r, c)].norm_sqr();
                        }
                    }
                }
                Error::EigenNonConvergence { dim: d, iterations: tol::EIGH_MAX_ITERS, residual: off.sqrt() }
            })?;
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = order.iter().map(|&j| eig.eigenvalues[j]).collect();
        let eigenvectors = CMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(SpectralDecomposition { eigenvalues, eigenvectors })
    }

    /// Frobenius-closest matrix of rank at most `k`: keeps the `k` eigenvalues
    /// of largest magnitude.
    pub fn best_rank_k(&self, k: usize) -> Result<HermitianMatrix> {
        let d = self.dim();
        if k == 0 || k > d {
            return Err(Error::RankOutOfRange { k, dim: d });
        }
        let spec = self.eigh()?;
        Ok(spec.reassemble_with(&truncate_by_magnitude(&spec.eigenvalues, k)))
    }

    /// Apply `f` to every eigenvalue.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
        let spec = self.eigh()?;
        let w: Vec<f64> = spec.eigenvalues.iter().map(|&l| f(l)).collect();
        Ok(spec.reassemble_with(&w))
    }
}

/// Zeroes all but the `k` entries of largest magnitude (ties keep the earlier index).
pub(crate) fn truncate_by_magnitude(values: &[f64], k: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    let mut out = vec![0.0; values.len()];
    for &j in order.iter().take(k) {
        out[j] = values[j];
    }
    out
}

#[allow(dead_code)]
pub(crate) fn unitarity_defect(v: &CMatrix) -> f64 {
    let g = v.adjoint() * v;
    let d = g.nrows();
    let mut err = 0.0f64;
    for r in 0..d {
        for c in 0..d {
            let target = if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            err = err.max((g[(r, c)] - target).norm());
        }
    }
    err
}
