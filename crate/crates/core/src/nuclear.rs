//! Trace-norm confidence set under the state-space constraint: eigenvalue
//! estimation on an independent batch, rank selection and the S1 ball.

use crate::error::{Error, Result};
use crate::frobenius::{ConfidenceReport, Method, NormKind};
use crate::matrix::{project_rank_k_state_space, HermitianMatrix};
use crate::measurement::MeasurementBatch;
use crate::recovery::{pilot_estimate, rank_reduce, PilotConfig, RateFunction};
use crate::sensing::{adjoint_average, apply_sampling};

#[derive(Clone, Debug)]
pub struct EigenvalueEstimate {
    /// Eigenvalues of the clipped estimate, non-increasing.
    pub lambdas: Vec<f64>,
    /// Deviation scale `v_n`.
    pub v_n: f64,
    /// Id of the batch the eigenvalues were estimated from.
    pub source: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NuclearSetConfig {
    /// Radius constant.
    pub c: f64,
    /// Multiplier of `v_n`.
    pub c_v: f64,
    pub rate: RateFunction,
}

impl NuclearSetConfig {
    pub fn new(c: f64, c_v: f64, rate: RateFunction) -> Result<Self> {
        if !(c > 0.0 && c_v > 0.0) {
            return Err(Error::InvalidParameter(format!("nuclear constants C={c}, c_v={c_v} must be positive")));
        }
        Ok(Self { c, c_v, rate })
    }

    /// `c_v (r_n(d) tau_n(d) + sqrt(d/n))`.
    pub fn v_n(&self) -> f64 {
        let r = &self.rate;
        self.c_v * (r.r(r.d) * r.tau(r.d) + (r.d as f64 / r.n as f64).sqrt())
    }
}

/// `theta' = theta~ + (1/n) sum X^i (Y_i - tr(X^i theta~))` on the second
/// batch, with negative eigenvalues clipped.
pub fn eigenvalue_estimator(
    second: &MeasurementBatch,
    theta_tilde: &HermitianMatrix,
    pilot_batch_id: u64,
    cfg: &NuclearSetConfig,
) -> Result<EigenvalueEstimate> {
    if second.id() == pilot_batch_id {
        return Err(Error::SampleReuse(pilot_batch_id));
    }
    let pred = apply_sampling(second.plan(), theta_tilde)?;
    let resid: Vec<f64> = second.y().iter().zip(&pred).map(|(y, p)| y - p).collect();
    let raw = theta_tilde + &adjoint_average(second.plan(), &resid)?;
    let lambdas = raw.eigh()?.eigenvalues.into_iter().map(|l| l.max(0.0)).collect();
    Ok(EigenvalueEstimate { lambdas, v_n: cfg.v_n(), source: second.id() })
}

/// Smallest `k` with a rank-`k` witness within `r_n(k)` of the pilot and
/// eigenvalue mass `1 - sum_{j<=k} lambda_j <= 2k sqrt(d/n)`; `d` otherwise.
pub fn select_k_hat(pilot: &HermitianMatrix, est: &EigenvalueEstimate, rate: &RateFunction) -> Result<usize> {
    let d = pilot.dim();
    let spec = pilot.eigh()?;
    let mut mags: Vec<f64> = spec.eigenvalues.iter().map(|l| l.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut tail = vec![0.0; d + 1];
    for k in (0..d).rev() {
        tail[k] = tail[k + 1] + mags[k] * mags[k];
    }
    let scale = (d as f64 / rate.n as f64).sqrt();
    let slack = 1e-12 * pilot.frobenius_norm();
    let mut mass = 0.0;
    for k in 1..=d {
        mass += est.lambdas.get(k - 1).copied().unwrap_or(0.0);
        if tail[k].sqrt() <= rate.r(k) + slack && 1.0 - mass <= 2.0 * k as f64 * scale {
            return Ok(k);
        }
    }
    Ok(d)
}

/// Ball `{v : |v - c|_{S1} <= C sqrt(k) r_n(k)}` with `k = k_hat` and the
/// center the rank-`2k` state-space projection of the pilot.
pub fn nuclear_confidence_set(
    pilot: &HermitianMatrix,
    est: &EigenvalueEstimate,
    cfg: &NuclearSetConfig,
    alpha: f64,
) -> Result<ConfidenceReport> {
    let d = pilot.dim();
    let k = select_k_hat(pilot, est, &cfg.rate)?;
    let center = project_rank_k_state_space(pilot, (2 * k).min(d))?.into_matrix();
    let radius = cfg.c * (k as f64).sqrt() * cfg.rate.r(k);
    Ok(ConfidenceReport {
        center,
        radius_sq: radius * radius,
        norm_kind: NormKind::Nuclear,
        level_alpha: alpha,
        method: Method::NuclearS1,
        statistic_value: est.lambdas.iter().take(k).sum(),
        n: cfg.rate.n,
        d,
        k_hat: Some(k),
    })
}

/// `|sum_{l<=j} est_l - sum_{l<=j} truth_l| <= 2 j v_n` for all `j`.
pub fn partial_sums_within(est: &EigenvalueEstimate, truth_desc: &[f64]) -> bool {
    let (mut a, mut b) = (0.0, 0.0);
    for (j, (x, y)) in est.lambdas.iter().zip(truth_desc).enumerate() {
        a += x;
        b += y;
        if (a - b).abs() > 2.0 * (j + 1) as f64 * est.v_n {
            return false;
        }
    }
    true
}

/// Warning text when `k sqrt(d log d / n)` is not small (threshold 1/2).
pub fn regime_warning(k: usize, d: usize, n: usize) -> Option<String> {
    let df = d as f64;
    let q = k as f64 * (df * df.ln().max(0.0) / n as f64).sqrt();
    (q > 0.5).then(|| format!("k sqrt(d log d / n) = {q:.3} is not small; the nuclear-norm set is outside its asymptotic regime"))
}

/// Everything the two-sample procedure produces.
#[derive(Clone, Debug)]
pub struct NuclearOutcome {
    pub pilot: HermitianMatrix,
    pub reduced: HermitianMatrix,
    pub reduced_rank: usize,
    pub estimate: EigenvalueEstimate,
    pub report: ConfidenceReport,
    pub warning: Option<String>,
}

/// Pilot on the first batch, rank reduction, eigenvalues on the second batch
/// and the S1 ball.
pub fn nuclear_pipeline(
    first: &MeasurementBatch,
    second: &MeasurementBatch,
    pilot_cfg: &PilotConfig,
    cfg: &NuclearSetConfig,
    alpha: f64,
) -> Result<NuclearOutcome> {
    if first.id() == second.id() {
        return Err(Error::SampleReuse(first.id()));
    }
    let pilot = pilot_estimate(first, pilot_cfg)?;
    let (reduced, reduced_rank) = rank_reduce(&pilot, &cfg.rate)?;
    let estimate = eigenvalue_estimator(second, &reduced, first.id(), cfg)?;
    let report = nuclear_confidence_set(&pilot, &estimate, cfg, alpha)?;
    let warning = regime_warning(report.k_hat.unwrap(), pilot.dim(), cfg.rate.n);
    Ok(NuclearOutcome { pilot, reduced, reduced_rank, estimate, report, warning })
}
