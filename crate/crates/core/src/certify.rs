//! Sequential stopping certificate: doubling epochs with sample splitting.
//!
//! Epoch `m` spends `2^{m+1}` measurements. The first half feeds the pilot,
//! projected onto the state space; the second half builds a Frobenius
//! confidence set around it at level `delta / (3T)`. The loop stops as soon
//! as the set radius drops to `epsilon`.

use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::frobenius::{
    pauli_z_constant, paired_confidence_set, reavg_confidence_set_with, rss_confidence_set,
    rss_confidence_set_bernoulli, rss_simulation_set_with, ustat_confidence_set, ConfidenceReport,
    Method, Regime, RssMode, SimulationConstants, UStatConstants,
};
use crate::matrix::{project_state_space, QuantumState};
use crate::measurement::{measure_bernoulli_pauli, measure_gaussian, MeasurementBatch, NoiseModel};
use crate::recovery::{pilot_estimate, PilotConfig};
use crate::sensing::{draw_plan, full_basis_plan, DesignEnsemble, SensingPlan};

/// Source of measurements for a plan: a simulator or a live instrument.
pub trait MeasurementSource {
    fn measure(&mut self, plan: &SensingPlan) -> Result<MeasurementBatch>;
}

impl<F: FnMut(&SensingPlan) -> Result<MeasurementBatch>> MeasurementSource for F {
    fn measure(&mut self, plan: &SensingPlan) -> Result<MeasurementBatch> {
        self(plan)
    }
}

/// Simulated measurements of a known state.
pub struct SimulatedSource<R> {
    pub truth: QuantumState,
    pub noise: NoiseModel,
    pub rng: R,
}

impl<R: Rng> MeasurementSource for SimulatedSource<R> {
    fn measure(&mut self, plan: &SensingPlan) -> Result<MeasurementBatch> {
        match self.noise {
            NoiseModel::Gaussian { sigma } => measure_gaussian(plan, self.truth.matrix(), sigma, &mut self.rng),
            NoiseModel::BernoulliPauli { t } => measure_bernoulli_pauli(plan, &self.truth, t, &mut self.rng),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CertificateConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub ensemble: DesignEnsemble,
    pub noise: NoiseModel,
    /// Epoch cap.
    pub t_max: usize,
    /// Added to `ceil(log2(d / epsilon))` to give the `T` in the per-epoch level.
    pub margin: usize,
    pub regime: Regime,
    pub sim: SimulationConstants,
    pub pilot: PilotConfig,
    /// Gaussian designs only: use the U-statistic set once `2^m >= d^2`.
    pub isotropic_ustat: bool,
}

impl CertificateConfig {
    /// Defaults with `T_max = T`.
    pub fn new(epsilon: f64, delta: f64, ensemble: DesignEnsemble, noise: NoiseModel, regime: Regime) -> Self {
        let mut cfg = Self {
            epsilon,
            delta,
            ensemble,
            noise,
            t_max: 1,
            margin: 2,
            regime,
            sim: SimulationConstants::default(),
            pilot: PilotConfig::default(),
            isotropic_ustat: false,
        };
        cfg.t_max = cfg.epochs();
        cfg
    }

    /// `T = ceil(log2(d / epsilon)) + margin`, at least 1.
    pub fn epochs(&self) -> usize {
        let base = (self.ensemble.dim() as f64 / self.epsilon).log2().ceil().max(0.0) as usize;
        (base + self.margin).max(1)
    }

    pub fn alpha(&self) -> f64 {
        self.delta / (3.0 * self.epochs() as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidParameter("T_max must be at least 1".into()));
        }
        if self.t_max >= 40 {
            return Err(Error::InvalidParameter(format!("T_max = {} is out of range", self.t_max)));
        }
        if matches!(self.noise, NoiseModel::BernoulliPauli { .. }) && !self.ensemble.is_pauli() {
            return Err(Error::WrongDesign("Pauli"));
        }
        self.pilot.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub m: usize,
    /// `2^{m+1}`.
    pub budget: usize,
    pub method: Method,
    pub statistic: f64,
    pub radius_sq: f64,
    /// Frobenius radius of the set around the pilot; bounds the pilot error on coverage.
    pub diameter: f64,
    pub pilot_batch: u64,
    pub uq_batch: u64,
}

pub const EPOCH_CSV_HEADER: &str = "m,budget,method,statistic,radius_sq,diameter";

impl EpochRecord {
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{},{}", self.m, self.budget, self.method, self.statistic, self.radius_sq, self.diameter)
    }
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub n_hat: usize,
    pub theta_hat: QuantumState,
    pub epoch_log: Vec<EpochRecord>,
    pub stopped: bool,
    pub epsilon: f64,
    pub delta: f64,
    pub epochs_t: usize,
    pub alpha: f64,
}

/// Draws the UQ half of epoch `m`. Returns the plan and the method it feeds.
fn uq_plan<R: Rng + ?Sized>(cfg: &CertificateConfig, half: usize, rng: &mut R) -> Result<(SensingPlan, Method)> {
    let d = cfg.ensemble.dim();
    let paired = match cfg.noise {
        NoiseModel::BernoulliPauli { t } => (t as usize) < half,
        NoiseModel::Gaussian { .. } => false,
    };
    if paired {
        return Ok((draw_plan(cfg.ensemble, half / 2, rng)?.duplicated(), Method::PairedRss));
    }
    if half >= d * d {
        if cfg.ensemble.is_pauli() {
            return Ok((full_basis_plan(cfg.ensemble, half / (d * d))?, Method::ReAvg));
        }
        if cfg.isotropic_ustat {
            return Ok((draw_plan(cfg.ensemble, half, rng)?, Method::UStat));
        }
    }
    Ok((draw_plan(cfg.ensemble, half, rng)?, Method::Rss))
}

/// `|rho - sigma|_F^2 <= 2` for any two states, so every set can be cut to this radius.
const STATE_DIAMETER_SQ: f64 = 2.0;

/// Deviation constant of the Gaussian-design RSS set: its coverage loses `2 exp(-n/24)`.
const GAUSSIAN_RIP_RATE: f64 = 1.0 / 24.0;

fn confidence_set(cfg: &CertificateConfig, method: Method, batch: &MeasurementBatch, center: &QuantumState) -> Result<ConfidenceReport> {
    let alpha = cfg.alpha();
    let c = center.matrix();
    let d = cfg.ensemble.dim();
    let z = if cfg.ensemble.is_pauli() { pauli_z_constant(alpha, 1.0)? } else { 0.0 };
    // Bernoulli noise: centering dropped, variance bound v = d/T in the constants.
    let (centering, bound) = match cfg.noise {
        NoiseModel::Gaussian { sigma } => (sigma, sigma),
        NoiseModel::BernoulliPauli { .. } => (0.0, cfg.noise.sigma_bound(d)),
    };
    let bernoulli = matches!(cfg.noise, NoiseModel::BernoulliPauli { .. });
    match method {
        Method::PairedRss => paired_confidence_set(batch, c, bound * bound, alpha, cfg.regime, z, &cfg.sim),
        Method::ReAvg => reavg_confidence_set_with(batch, c, centering, bound, alpha),
        Method::UStat => {
            let k = match cfg.regime {
                Regime::Theory => UStatConstants::theory(alpha)?,
                Regime::Simulation => UStatConstants::simulation(&cfg.sim),
            };
            ustat_confidence_set(batch, c, alpha, k)
        }
        Method::Rss if cfg.regime == Regime::Theory
            && !cfg.ensemble.is_pauli()
            && 2.0 * (-GAUSSIAN_RIP_RATE * batch.n() as f64).exp() > alpha / 3.0 =>
        {
            // too few samples for the non-asymptotic guarantee: only the trivial set is valid
            let mut set = rss_confidence_set(batch, c, centering, alpha, RssMode::ImplicitSolve, z)?;
            set.radius_sq = f64::INFINITY;
            Ok(set)
        }
        Method::Rss => match (cfg.regime, bernoulli) {
            (Regime::Theory, false) => rss_confidence_set(batch, c, centering, alpha, RssMode::ImplicitSolve, z),
            (Regime::Theory, true) => rss_confidence_set_bernoulli(batch, c, alpha, RssMode::ImplicitSolve, z),
            (Regime::Simulation, _) => rss_simulation_set_with(batch, c, centering, bound, alpha, &cfg.sim),
        },
        Method::NuclearS1 => Err(Error::InvalidParameter("nuclear sets do not drive the certificate".into())),
    }
}

/// Runs the doubling-epoch procedure against `source`. Plans are drawn from `rng`.
pub fn run_certificate<S: MeasurementSource + ?Sized, R: Rng + ?Sized>(
    source: &mut S,
    cfg: &CertificateConfig,
    rng: &mut R,
) -> Result<Certificate> {
    cfg.validate()?;
    let mut seen = HashSet::new();
    let mut log = Vec::new();
    let mut n_hat = 0;
    let mut theta_hat = None;
    let mut stopped = false;
    for m in 1..=cfg.t_max {
        let half = 1usize << m;
        let pilot_plan = draw_plan(cfg.ensemble, half, rng)?;
        let (plan, method) = uq_plan(cfg, half, rng)?;
        let pilot_batch = source.measure(&pilot_plan)?;
        let uq_batch = source.measure(&plan)?;
        for (b, p) in [(&pilot_batch, &pilot_plan), (&uq_batch, &plan)] {
            if b.n() != p.n() || b.dim() != p.dim() {
                return Err(Error::LengthMismatch { expected: p.n(), actual: b.n() });
            }
            if !seen.insert(b.id()) {
                return Err(Error::SampleReuse(b.id()));
            }
        }
        n_hat += 2 * half;
        let center = project_state_space(&pilot_estimate(&pilot_batch, &cfg.pilot)?)?;
        let mut set = confidence_set(cfg, method, &uq_batch, &center)?;
        set.radius_sq = set.radius_sq.min(STATE_DIAMETER_SQ);
        let diameter = set.radius();
        log.push(EpochRecord {
            m,
            budget: 2 * half,
            method,
            statistic: set.statistic_value,
            radius_sq: set.radius_sq,
            diameter,
            pilot_batch: pilot_batch.id(),
            uq_batch: uq_batch.id(),
        });
        theta_hat = Some(center);
        if diameter <= cfg.epsilon {
            stopped = true;
            break;
        }
    }
    Ok(Certificate {
        n_hat,
        theta_hat: theta_hat.expect("t_max >= 1"),
        epoch_log: log,
        stopped,
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        epochs_t: cfg.epochs(),
        alpha: cfg.alpha(),
    })
}

/// Simulation mode: measurement noise and plans come from independent streams of `seed`.
pub fn run_certificate_simulated(truth: &QuantumState, cfg: &CertificateConfig, seed: u64) -> Result<Certificate> {
    let mut source = SimulatedSource {
        truth: truth.clone(),
        noise: cfg.noise,
        rng: crate::seed::stream(seed, &[crate::seed::tag("noise")]),
    };
    let mut rng = crate::seed::stream(seed, &[crate::seed::tag("plans")]);
    run_certificate(&mut source, cfg, &mut rng)
}
