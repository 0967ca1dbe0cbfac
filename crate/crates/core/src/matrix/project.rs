use super::{HermitianMatrix, QuantumState};
use crate::error::{Error, Result};

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Frobenius projection onto the set of density matrices.
pub fn project_state_space(a: &HermitianMatrix) -> Result<QuantumState> {
    let spec = a.eigh()?;
    let w = project_simplex(&spec.eigenvalues);
    Ok(QuantumState::new_unchecked(spec.reassemble_with(&w)))
}

/// Projection onto density matrices of rank at most `k`: keep the `k`
/// algebraically largest eigenvalues and project them onto the simplex.
pub fn project_rank_k_state_space(a: &HermitianMatrix, k: usize) -> Result<QuantumState> {
    let d = a.dim();
    if k == 0 || k > d {
        return Err(Error::RankOutOfRange { k, dim: d });
    }
    let spec = a.eigh()?;
    let kept = project_simplex(&spec.eigenvalues[..k]);
    let mut w = vec![0.0; d];
    w[..k].copy_from_slice(&kept);
    Ok(QuantumState::new_unchecked(spec.reassemble_with(&w)))
}
