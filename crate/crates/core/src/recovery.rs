//! Pilot estimation by nuclear-norm penalized least squares, rank reduction
//! and projection to the state space.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{project_state_space, CMatrix, HermitianMatrix, QuantumState};
use crate::measurement::MeasurementBatch;
use crate::seed;
use crate::sensing::{adjoint_average, apply_sampling, DesignKind, SensingPlan};

const DIVERGENCE_STREAK: usize = 10;
const POWER_ITERS: usize = 100;
const LIPSCHITZ_SAFETY: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepRule {
    /// Constant step `1/L`, `L` the largest eigenvalue of `X*X/n`.
    FixedLipschitz,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PilotConfig {
    pub lambda_scale: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_rule: StepRule,
}

impl Default for PilotConfig {
    fn default() -> Self {
        Self { lambda_scale: 2.0, max_iters: 2000, grad_tol: 1e-8, step_rule: StepRule::FixedLipschitz }
    }
}

impl PilotConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.grad_tol >= 0.0) || !(self.lambda_scale >= 0.0) {
            return Err(Error::InvalidParameter(format!("invalid pilot config {self:?}")));
        }
        Ok(())
    }
}

/// `r_n(k) = 2 sigma sqrt(D k d / n)`, the minimax Frobenius rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFunction {
    pub big_d: f64,
    pub sigma: f64,
    pub d: usize,
    pub n: usize,
}

impl RateFunction {
    pub fn new(big_d: f64, sigma: f64, d: usize, n: usize) -> Result<Self> {
        if !(big_d > 0.0) || !(sigma >= 0.0) || n == 0 || d == 0 {
            return Err(Error::InvalidParameter(format!("invalid rate D={big_d} sigma={sigma} d={d} n={n}")));
        }
        Ok(Self { big_d, sigma, d, n })
    }

    pub fn r(&self, k: usize) -> f64 {
        2.0 * self.sigma * (self.big_d * (k * self.d) as f64 / self.n as f64).sqrt()
    }

    /// Restricted isometry scale `sqrt(k d log d / n)`.
    pub fn tau(&self, k: usize) -> f64 {
        let d = self.d as f64;
        ((k as f64) * d * d.ln().max(0.0) / self.n as f64).sqrt()
    }
}

/// Result of a pilot fit.
#[derive(Clone, Debug)]
pub struct PilotFit {
    pub estimate: HermitianMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub objective: Vec<f64>,
    pub lambda: f64,
}

fn lipschitz(plan: &SensingPlan) -> Result<f64> {
    let d = plan.dim();
    match plan.ensemble().kind() {
        DesignKind::PauliBasis => {
            // X*X/n = sum_j (count_j d^2 / n) P_j over orthogonal projectors
            let mut counts = vec![0usize; d * d];
            for &j in plan.pauli_indices().unwrap() {
                counts[j as usize] += 1;
            }
            let max = *counts.iter().max().unwrap() as f64;
            Ok(max * (d * d) as f64 / plan.n() as f64)
        }
        DesignKind::GaussianIsotropic => {
            let mut rng = seed::stream(plan.seed(), &[seed::tag("lipschitz")]);
            let m = CMatrix::from_fn(d, d, |_, _| num_complex::Complex64::new(StandardNormal.sample(&mut rng), 0.0));
            let mut v = HermitianMatrix::hermitize(m);
            let mut est = 0.0;
            for _ in 0..POWER_ITERS {
                let nv = v.frobenius_norm();
                if nv == 0.0 {
                    break;
                }
                v = v.scaled(1.0 / nv);
                let w = adjoint_average(plan, &apply_sampling(plan, &v)?)?;
                est = v.inner(&w);
                v = w;
            }
            Ok(est)
        }
    }
}

fn soft_threshold(a: &HermitianMatrix, t: f64) -> Result<(HermitianMatrix, f64)> {
    let spec = a.eigh()?;
    let w: Vec<f64> = spec.eigenvalues.iter().map(|&l| l.signum() * (l.abs() - t).max(0.0)).collect();
    let nuc = w.iter().map(|x| x.abs()).sum();
    Ok((spec.reassemble_with(&w), nuc))
}

/// Proximal gradient for `(1/2n)|y - X theta|^2 + lambda |theta|_{S1}` with
/// `lambda = lambda_scale * sigma * sqrt(d/n)` and `sigma` the batch noise bound.
pub fn pilot_estimate(batch: &MeasurementBatch, cfg: &PilotConfig) -> Result<HermitianMatrix> {
    Ok(pilot_fit(batch, cfg)?.estimate)
}

pub fn pilot_fit(batch: &MeasurementBatch, cfg: &PilotConfig) -> Result<PilotFit> {
    let sigma = batch.noise().sigma_bound(batch.dim());
    let lambda = cfg.lambda_scale * sigma * (batch.dim() as f64 / batch.n() as f64).sqrt();
    pilot_fit_with_lambda(batch, cfg, lambda)
}

pub fn pilot_fit_with_lambda(batch: &MeasurementBatch, cfg: &PilotConfig, lambda: f64) -> Result<PilotFit> {
    cfg.validate()?;
    if batch.n() == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let plan = batch.plan();
    let y = batch.y();
    let n = y.len() as f64;
    let l = lipschitz(plan)? * LIPSCHITZ_SAFETY;
    let d = batch.dim();
    let mut theta = HermitianMatrix::zeros(d);
    if !(l > 0.0) {
        return Ok(PilotFit { estimate: theta, iterations: 0, converged: true, objective: vec![], lambda });
    }
    let objective = |pred: &[f64], nuc: f64| {
        pred.iter().zip(y).map(|(p, yi)| (yi - p).powi(2)).sum::<f64>() / (2.0 * n) + lambda * nuc
    };
    let mut pred = vec![0.0; y.len()];
    let mut history = vec![objective(&pred, 0.0)];
    let mut streak = 0;
    for it in 1..=cfg.max_iters {
        let resid: Vec<f64> = y.iter().zip(&pred).map(|(yi, p)| yi - p).collect();
        // gradient is -adjoint_average(resid)
        let g = adjoint_average(plan, &resid)?;
        let step = &theta + &g.scaled(1.0 / l);
        let (next, nuc) = soft_threshold(&step, lambda / l)?;
        let gmap = theta.dist_frobenius(&next) * l;
        theta = next;
        pred = apply_sampling(plan, &theta)?;
        let obj = objective(&pred, nuc);
        if obj > *history.last().unwrap() * (1.0 + 1e-12) + 1e-300 {
            streak += 1;
            if streak >= DIVERGENCE_STREAK {
                return Err(Error::SolverDiverged(streak));
            }
        } else {
            streak = 0;
        }
        history.push(obj);
        if gmap <= cfg.grad_tol {
            return Ok(PilotFit { estimate: theta, iterations: it, converged: true, objective: history, lambda });
        }
    }
    Ok(PilotFit { estimate: theta, iterations: cfg.max_iters, converged: false, objective: history, lambda })
}

/// Smallest `k'` whose best rank-`k'` approximation lies within `r_n(k')/2`
/// of the pilot, with that approximation.
pub fn rank_reduce(pilot: &HermitianMatrix, rate: &RateFunction) -> Result<(HermitianMatrix, usize)> {
    let d = pilot.dim();
    let spec = pilot.eigh()?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| spec.eigenvalues[b].abs().total_cmp(&spec.eigenvalues[a].abs()).then(a.cmp(&b)));
    // tail[k] = Frobenius error of keeping the k largest magnitudes
    let mut tail = vec![0.0; d + 1];
    for k in (0..d).rev() {
        tail[k] = tail[k + 1] + spec.eigenvalues[order[k]].powi(2);
    }
    let slack = 1e-12 * pilot.frobenius_norm();
    let k = (1..=d).find(|&k| tail[k].sqrt() <= rate.r(k) / 2.0 + slack).unwrap_or(d);
    let mut w = vec![0.0; d];
    for &j in order.iter().take(k) {
        w[j] = spec.eigenvalues[j];
    }
    Ok((spec.reassemble_with(&w), k))
}

/// Frobenius projection of the pilot onto the state space.
pub fn pilot_to_state(pilot: &HermitianMatrix) -> Result<QuantumState> {
    project_state_space(pilot)
}
