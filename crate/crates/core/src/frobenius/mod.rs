//! Frobenius-norm confidence sets: residual sum of squares, U-statistic,
//! re-averaged full-basis and paired (unknown variance) constructions.

mod report;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, HermitianMatrix};
use crate::measurement::MeasurementBatch;
use crate::quantile::{check_alpha, chi_square_quantile, normal_upper_quantile, xi_quantile, z_alpha};
use crate::sensing::{apply_sampling, DesignKind};

pub use report::{ConfidenceReport, Method, NormKind, REPORT_CSV_HEADER};

/// Which constant family a set uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Explicit, conservative constants from the coverage proofs.
    Theory,
    /// Monte Carlo calibrated constants.
    Simulation,
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "theory" => Ok(Regime::Theory),
            "simulation" => Ok(Regime::Simulation),
            other => Err(Error::InvalidParameter(format!("unknown constants regime {other:?}"))),
        }
    }
}

/// Calibrated constants of the simulation-regime radii.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationConstants {
    pub c_rss: f64,
    pub c_rss_prime: f64,
    pub c_ustat: f64,
    pub c_ustat_prime: f64,
}

impl Default for SimulationConstants {
    fn default() -> Self {
        Self { c_rss: 1.0, c_rss_prime: 6.0, c_ustat: 2.5, c_ustat_prime: 6.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RssMode {
    /// Bounds `|v - center|_F` by the diameter 2 of the state space.
    ShapeConstrained,
    /// Solves the implicit inequality for its largest root.
    ImplicitSolve,
}

/// Quantile constants of the RSS set at a given level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantileConstants {
    pub alpha: f64,
    /// `log(3 / alpha)`.
    pub z_alpha: f64,
    pub xi: f64,
    /// Deviation constant of the Pauli design (0 for Gaussian designs).
    pub z: f64,
    pub calibrated: Regime,
}

impl QuantileConstants {
    pub fn new(alpha: f64, sigma: f64, n: usize, z: f64, calibrated: Regime) -> Result<Self> {
        Ok(Self { alpha, z_alpha: z_alpha(alpha)?, xi: xi_quantile(alpha, sigma, n)?, z, calibrated })
    }
}

/// `z` with `2 exp(-C(K) z) = alpha / 3`, where `C(K) = 1 / ((16 + 8/3) K^2)`.
pub fn pauli_z_constant(alpha: f64, k: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("coherence K = {k} must be positive")));
    }
    let c = 1.0 / ((16.0 + 8.0 / 3.0) * k * k);
    Ok((6.0 / alpha).ln() / c)
}

/// Largest `x >= 0` with `x <= a + b sqrt(max(kappa x, floor))`, or 0 if none.
pub fn largest_root(a: f64, b: f64, kappa: f64, floor: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let disc = b * b * kappa + 4.0 * a;
    if disc >= 0.0 {
        let s = 0.5 * (b * kappa.sqrt() + disc.sqrt());
        let x = s * s;
        if kappa * x >= floor {
            best = x;
        }
    }
    let x2 = a + b * floor.sqrt();
    if x2 >= 0.0 && kappa * x2 <= floor {
        best = best.max(x2);
    }
    best.max(0.0)
}

fn residuals(batch: &MeasurementBatch, center: &HermitianMatrix) -> Result<Vec<f64>> {
    let pred = apply_sampling(batch.plan(), center)?;
    Ok(batch.y().iter().zip(&pred).map(|(y, p)| y - p).collect())
}

/// `(1/n) |Y - X center|^2 - sigma^2`.
pub fn rss_statistic(batch: &MeasurementBatch, center: &HermitianMatrix, sigma: f64) -> Result<f64> {
    let r = residuals(batch, center)?;
    Ok(r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64 - sigma * sigma)
}

/// Unbiased U-statistic `2/(n(n-1)) sum_{i<j} <Y_i X^i - center, Y_j X^j - center>`,
/// evaluated in `O(n d^2)` through `|sum a_i|^2 - sum |a_i|^2`.
pub fn ustat_statistic(batch: &MeasurementBatch, center: &HermitianMatrix) -> Result<f64> {
    let n = batch.n();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let d = batch.dim();
    center.check_dim(d)?;
    let plan = batch.plan();
    let y = batch.y();
    let cm = center.as_matrix();
    // S = sum_i Y_i X^i, and <X^i, center> = Re tr(X^i† center) = tr(X^i center) here
    let mut s = CMatrix::zeros(d, d);
    let mut sum_sq = 0.0;
    let inner = apply_sampling(plan, center)?;
    match plan.ensemble().kind() {
        DesignKind::GaussianIsotropic => {
            let mut acc = vec![0.0; d * d];
            for (i, &yi) in y.iter().enumerate() {
                let x = plan.gaussian_draw(i).unwrap();
                let mut xx = 0.0;
                for (a, &v) in acc.iter_mut().zip(x) {
                    *a += yi * v;
                    xx += v * v;
                }
                sum_sq += yi * yi * xx;
            }
            for r in 0..d {
                for c in 0..d {
                    s[(r, c)] = Complex64::new(acc[r * d + c], 0.0);
                }
            }
        }
        DesignKind::PauliBasis => {
            let idx = plan.pauli_indices().unwrap();
            let mut coef = vec![0.0; d * d];
            for (&j, &yi) in idx.iter().zip(y) {
                coef[j as usize] += yi;
                sum_sq += yi * yi;
            }
            sum_sq *= (d * d) as f64;
            for (j, &cj) in coef.iter().enumerate() {
                if cj != 0.0 {
                    crate::sensing::PauliString::from_index(plan.ensemble().qubits().unwrap(), j)?
                        .add_scaled_into(&mut s, d as f64 * cj);
                }
            }
        }
    }
    let nf = n as f64;
    let total = s.iter().zip(cm.iter()).map(|(a, c)| (a - c * nf).norm_sqr()).sum::<f64>();
    let cross: f64 = y.iter().zip(&inner).map(|(yi, ci)| yi * ci).sum();
    let diag = sum_sq - 2.0 * cross + nf * center.frobenius_norm_sq();
    Ok((total - diag) / (nf * (nf - 1.0)))
}

/// `(2/n) sum_{i <= n/2} (Y_i - <X^i, center>)(Y_{i+n/2} - <X^i, center>)`.
pub fn paired_rss_statistic(batch: &MeasurementBatch, center: &HermitianMatrix) -> Result<f64> {
    let n = batch.n();
    if n < 2 || n % 2 != 0 {
        return Err(Error::PairingViolated(n / 2));
    }
    batch.plan().check_paired().map_err(Error::PairingViolated)?;
    let r = residuals(batch, center)?;
    let h = n / 2;
    Ok(2.0 / n as f64 * (0..h).map(|i| r[i] * r[i + h]).sum::<f64>())
}

/// Multiplicity `m` of a batch that measures every basis index equally often.
pub fn full_basis_multiplicity(batch: &MeasurementBatch) -> Result<usize> {
    let idx = batch.plan().pauli_indices().ok_or(Error::WrongDesign("Pauli"))?;
    let d2 = batch.dim() * batch.dim();
    if batch.n() % d2 != 0 {
        return Err(Error::NotFullBasis(format!("n = {} is not a multiple of d^2 = {d2}", batch.n())));
    }
    let m = batch.n() / d2;
    let mut counts = vec![0usize; d2];
    for &j in idx {
        counts[j as usize] += 1;
    }
    if let Some((j, &c)) = counts.iter().enumerate().find(|(_, &c)| c != m) {
        return Err(Error::NotFullBasis(format!("index {j} appears {c} times, expected {m}")));
    }
    Ok(m)
}

/// `(1/n)|Z~|^2 - sigma^2 d^2 / n` with `Z_k = m^{-1/2} sum_l Y_{k,l}` and
/// `Z~_k = Z_k - sqrt(n) <center, E_k>`.
pub fn reavg_statistic(batch: &MeasurementBatch, center: &HermitianMatrix, sigma: f64) -> Result<f64> {
    let m = full_basis_multiplicity(batch)?;
    let d = batch.dim();
    center.check_dim(d)?;
    let q = batch.ensemble().qubits().unwrap();
    let d2 = d * d;
    let mut z = vec![0.0; d2];
    for (&j, &yi) in batch.plan().pauli_indices().unwrap().iter().zip(batch.y()) {
        z[j as usize] += yi;
    }
    let n = batch.n() as f64;
    let sm = (m as f64).sqrt();
    let mut total = 0.0;
    for (k, zk) in z.iter().enumerate() {
        let ck = crate::sensing::PauliString::from_index(q, k)?.trace_with(center.as_matrix()).re;
        let zt = zk / sm - n.sqrt() * ck;
        total += zt * zt;
    }
    Ok(total / n - sigma * sigma * d2 as f64 / n)
}

/// Squared radius of the RSS set with Gaussian tail constants at level `alpha/3`.
pub fn rss_radius_sq(stat: f64, n: usize, d: usize, sigma: f64, alpha: f64, mode: RssMode, z: f64) -> Result<f64> {
    let third = alpha / 3.0;
    let xi = xi_quantile(third, sigma, n)?;
    let z_cross = z_alpha(third)?;
    Ok(rss_radius_sq_with(stat, n, d, sigma * sigma, mode, z, xi, z_cross))
}

#[allow(clippy::too_many_arguments)]
fn rss_radius_sq_with(stat: f64, n: usize, d: usize, var: f64, mode: RssMode, z: f64, xi: f64, z_cross: f64) -> f64 {
    let nf = n as f64;
    let a = 2.0 * (stat + z * d as f64 / nf + xi / nf.sqrt());
    let floor = 4.0 * z * d as f64 / nf;
    let r = match mode {
        RssMode::ShapeConstrained => a + 2.0 / nf.sqrt() * (var * z_cross * floor.max(12.0)).sqrt(),
        RssMode::ImplicitSolve => largest_root(a, 2.0 / nf.sqrt() * (var * z_cross).sqrt(), 3.0, floor),
    };
    r.max(0.0)
}

fn report(
    center: &HermitianMatrix,
    radius_sq: f64,
    alpha: f64,
    method: Method,
    statistic_value: f64,
    n: usize,
) -> ConfidenceReport {
    ConfidenceReport {
        center: center.clone(),
        radius_sq,
        norm_kind: NormKind::Frobenius,
        level_alpha: alpha,
        method,
        statistic_value,
        n,
        d: center.dim(),
        k_hat: None,
    }
}

/// RSS confidence set for Gaussian noise of known level `sigma`.
/// `z = 0` for Gaussian designs; see [`pauli_z_constant`] for Pauli designs.
pub fn rss_confidence_set(
    batch: &MeasurementBatch,
    center: &HermitianMatrix,
    sigma: f64,
    alpha: f64,
    mode: RssMode,
    z: f64,
) -> Result<ConfidenceReport> {
    check_alpha(alpha)?;
    if !(z >= 0.0) {
        return Err(Error::InvalidParameter(format!("z = {z} must be nonnegative")));
    }
    let stat = rss_statistic(batch, center, sigma)?;
    let r = rss_radius_sq(stat, batch.n(), batch.dim(), sigma, alpha, mode, z)?;
    Ok(report(center, r, alpha, Method::Rss, stat, batch.n()))
}

/// RSS set under the Bernoulli measurement model. The variance bound
/// `v = d/T` replaces `sigma^2`, the centering is dropped, and the tail
/// constants come from Chebyshev's inequality (`xi = sqrt(3/alpha)`,
/// cross-term constant `3/alpha`); valid for `T >= 4 d^2`.
pub fn rss_confidence_set_bernoulli(
    batch: &MeasurementBatch,
    center: &HermitianMatrix,
    alpha: f64,
    mode: RssMode,
    z: f64,
) -> Result<ConfidenceReport> {
    check_alpha(alpha)?;
    let v = batch.noise().variance_bound(batch.dim());
    let stat = rss_statistic(batch, center, 0.0)?;
    let third = alpha / 3.0;
    let r = rss_radius_sq_with(stat, batch.n(), batch.dim(), v, mode, z, (1.0 / third).sqrt(), 1.0 / third);
    Ok(report(center, r, alpha, Method::Rss, stat, batch.n()))
}

/// Simulation-regime RSS radius: largest `x` with
/// `x <= stat + C sigma^2 / sqrt(n) + C' max(sigma, 1) sqrt(x) / sqrt(n)`.
/// The `C'` term also carries the design fluctuation, which does not shrink
/// with the noise, so it is never scaled below its unit-noise value.
pub fn rss_simulation_radius_sq(stat: f64, n: usize, sigma: f64, c: &SimulationConstants) -> f64 {
    let sn = (n as f64).sqrt();
    largest_root(stat + c.c_rss * sigma * sigma / sn, c.c_rss_prime * sigma.max(1.0) / sn, 1.0, 0.0)
}

pub fn rss_simulation_set(
    batch: &MeasurementBatch,
    center: &HermitianMatrix,
    sigma: f64,
    alpha: f64,
    c: &SimulationConstants,
) -> Result<ConfidenceReport> {
    rss_simulation_set_with(batch, center, sigma, sigma, alpha, c)
}

/// Simulation-regime RSS set with separate centering level and constant level.
pub fn rss_simulation_set_with(
    batch: &MeasurementBatch,
    center: &HermitianMatrix,
    centering_sigma: f64,
    sigma_bound: f64,
    alpha: f64,
    c: &SimulationConstants,
) -> Result<ConfidenceReport> {
    let stat = rss_statistic(batch, center, centering_sigma)?;
    let r = rss_simulation_radius_sq(stat, batch.n(), sigma_bound, c);
    Ok(report(center, r, alpha, Method::Rss, stat, batch.n()))
}

/// Plug-in diameter `(r+ + C/sqrt(n) + C' sqrt(r+)/sqrt(n))^{1/2}`, `r+ = max(r, 0)`.
pub fn rss_table_radius(stat: f64, n: usize, c: f64, c_prime: f64) -> f64 {
    let r = stat.max(0.0);
    let sn = (n as f64).sqrt();
    (r + c / sn + c_prime * r.sqrt() / sn).sqrt()
}

/// Plug-in diameter `(R + C d/n + C' sqrt(R+)/sqrt(n))^{1/2}`. Only the
/// square roots see the clamp: the U-statistic is unbiased, so its linear
/// term is kept signed (the bracket itself is clamped at 0).
pub fn ustat_table_radius(stat: f64, n: usize, d: usize, c: f64, c_prime: f64) -> f64 {
    let nf = n as f64;
    (stat + c * d as f64 / nf + c_prime * stat.max(0.0).sqrt() / nf.sqrt()).max(0.0).sqrt()
}

/// Constants `(C1, C2)` of the U-statistic set `x <= R + C1 sqrt(x)/sqrt(n) + C2 d/n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UStatConstants {
    Theory { c1: f64, c2: f64 },
    Simulation { c_ustat: f64, c_ustat_prime: f64 },
}

impl UStatConstants {
    /// `C1 = C2 = sqrt(1/alpha)`, the order of the deviation constants.
    pub fn theory(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let zeta = (1.0 / alpha).sqrt();
        Ok(UStatConstants::Theory { c1: zeta, c2: zeta })
    }

    pub fn simulation(c: &SimulationConstants) -> Self {
        UStatConstants::Simulation { c_ustat: c.c_ustat, c_ustat_prime: c.c_ustat_prime }
    }

    fn pair(&self) -> (f64, f64) {
        match *self {
            UStatConstants::Theory { c1, c2 } => (c1, c2),
            UStatConstants::Simulation { c_ustat, c_ustat_prime } => (c_ustat_prime, c_ustat),
        }
    }
}

pub fn ustat_radius_sq(stat: f64, n: usize, d: usize, constants: UStatConstants) -> f64 {
    let (c1, c2) = constants.pair();
    let nf = n as f64;
    largest_root(stat + c2 * d as f64 / nf, c1 / nf.sqrt(), 1.0, 0.0)
}

/// U-statistic confidence set. Its coverage theory covers Gaussian designs
/// only; under Pauli designs the statistic stays unbiased but the set is
/// known to under-cover.
pub fn ustat_confidence_set(
    batch: &MeasurementBatch,
    center: &HermitianMatrix,
    alpha: f64,
    constants: UStatConstants,
) -> Result<ConfidenceReport> {
    check_alpha(alpha)?;
    let stat = ustat_statistic(batch, center)?;
    let r = ustat_radius_sq(stat, batch.n(), batch.dim(), constants);
    Ok(report(center, r, alpha, Method::UStat, stat, batch.n()))
}

/// Re-averaged radius: largest `x` with
/// `x <= R + 2 z_{alpha/2} sigma sqrt(x)/sqrt(n) + sigma^2 (Q_{chi2_{d^2}}(1 - alpha/2) - d^2)/n`.
pub fn reavg_radius_sq(stat: f64, n: usize, d: usize, sigma: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let nf = n as f64;
    let d2 = (d * d) as f64;
    let z = normal_upper_quantile(alpha / 2.0)?;
    let noise = if sigma > 0.0 { sigma * sigma * (chi_square_quantile(d2, 1.0 - alpha / 2.0)? - d2) / nf } else { 0.0 };
    Ok(largest_root(stat + noise, 2.0 * z * sigma / nf.sqrt(), 1.0, 0.0))
}

pub fn reavg_confidence_set(
    batch: &MeasurementBatch,
    center: &HermitianMatrix,
    sigma: f64,
    alpha: f64,
) -> Result<ConfidenceReport> {
    reavg_confidence_set_with(batch, center, sigma, sigma, alpha)
}

/// Re-averaged set with separate centering level and constant level; used
/// when only a variance bound is known.
pub fn reavg_confidence_set_with(
    batch: &MeasurementBatch,
    center: &HermitianMatrix,
    centering_sigma: f64,
    sigma_bound: f64,
    alpha: f64,
) -> Result<ConfidenceReport> {
    let stat = reavg_statistic(batch, center, centering_sigma)?;
    let r = reavg_radius_sq(stat, batch.n(), batch.dim(), sigma_bound, alpha)?;
    Ok(report(center, r, alpha, Method::ReAvg, stat, batch.n()))
}

/// Paired-statistic set needing only a variance bound `v`. It uses the RSS
/// shapes on the `n/2` pairs; in the theory regime the noise-product
/// quantile comes from Chebyshev (`v sqrt(3/alpha)`).
pub fn paired_confidence_set(
    batch: &MeasurementBatch,
    center: &HermitianMatrix,
    var_bound: f64,
    alpha: f64,
    regime: Regime,
    z: f64,
    sim: &SimulationConstants,
) -> Result<ConfidenceReport> {
    check_alpha(alpha)?;
    let stat = paired_rss_statistic(batch, center)?;
    let pairs = batch.n() / 2;
    let r = match regime {
        Regime::Theory => {
            let third = alpha / 3.0;
            rss_radius_sq_with(stat, pairs, batch.dim(), var_bound, RssMode::ImplicitSolve, z, var_bound * (1.0 / third).sqrt(), z_alpha(third)?)
        }
        Regime::Simulation => rss_simulation_radius_sq(stat, pairs, var_bound.sqrt(), sim),
    };
    Ok(report(center, r, alpha, Method::PairedRss, stat, batch.n()))
}

#[cfg(test)]
mod tests;
