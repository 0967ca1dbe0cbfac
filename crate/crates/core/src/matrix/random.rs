use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::{CMatrix, HermitianMatrix, QuantumState};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// `k` Haar-distributed orthonormal columns via QR of a Gaussian matrix,
/// with the phase of `diag(R)` absorbed into `Q`.
pub(crate) fn haar_columns<R: Rng + ?Sized>(d: usize, k: usize, real: bool, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, k, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = if real { 0.0 } else { StandardNormal.sample(rng) };
        Complex64::new(re, im)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

fn check_rank(d: usize, k: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::RankOutOfRange { k, dim: d });
    }
    Ok(())
}

fn simplex_uniform<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Random rank-`k` density matrix with Haar eigenvectors and simplex-uniform weights.
pub fn random_rank_k_state<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Result<QuantumState> {
    check_rank(d, k)?;
    let w = simplex_uniform(k, rng);
    state_from_weights(d, &w, false, rng)
}

/// As [`random_rank_k_state`] but with real orthogonal eigenvectors, for
/// designs that require real symmetric parameters.
pub fn random_real_rank_k_state<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Result<QuantumState> {
    check_rank(d, k)?;
    let w = simplex_uniform(k, rng);
    state_from_weights(d, &w, true, rng)
}

/// `sum_j w_j v_j v_j†` with Haar `v_j`; `weights` must lie on the simplex.
pub fn state_from_weights<R: Rng + ?Sized>(d: usize, weights: &[f64], real: bool, rng: &mut R) -> Result<QuantumState> {
    check_rank(d, weights.len())?;
    if weights.iter().any(|&w| w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter("weights must lie on the probability simplex".into()));
    }
    let v = haar_columns(d, weights.len(), real, rng);
    Ok(QuantumState::new_unchecked(HermitianMatrix::from_weighted_projectors(&v, weights)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn pure_state_purity() {
        let mut rng = seed::rng_from(1);
        for d in [2, 3, 8] {
            let rho = random_rank_k_state(d, 1, &mut rng).unwrap();
            assert!((rho.purity() - 1.0).abs() < 1e-10);
            assert!((rho.matrix().trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_full_rank_is_maximally_mixed() {
        let mut rng = seed::rng_from(2);
        let rho = state_from_weights(4, &[0.25; 4], false, &mut rng).unwrap();
        assert!(rho.matrix().dist_frobenius(QuantumState::maximally_mixed(4).matrix()) < 1e-12);
    }

    #[test]
    fn rank_two_has_two_eigenvalues() {
        let mut rng = seed::rng_from(3);
        for _ in 0..20 {
            let rho = random_rank_k_state(4, 2, &mut rng).unwrap();
            let big = rho.matrix().eigenvalues().iter().filter(|&&l| l > 1e-8).count();
            assert_eq!(big, 2);
            assert!(QuantumState::new(rho.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn real_states_are_real() {
        let mut rng = seed::rng_from(4);
        let rho = random_real_rank_k_state(6, 2, &mut rng).unwrap();
        assert_eq!(rho.matrix().max_imag(), 0.0);
    }
}
