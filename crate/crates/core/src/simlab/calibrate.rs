//! Monte-Carlo calibration of the empirical constants. Each replication
//! yields the smallest constant that would have covered it; a grid value
//! then covers a cell iff it is at least that threshold.

use rayon::prelude::*;

use super::{replications, EtaKind, ExperimentSpec};
use crate::constants::{fixture_key, Constants};
use crate::error::{Error, Result};
use crate::frobenius::{Method, Regime, SimulationConstants};
use crate::matrix::{random_rank_k_state, random_real_rank_k_state};
use crate::measurement::measure_gaussian;
use crate::nuclear::{nuclear_pipeline, NuclearSetConfig};
use crate::recovery::{pilot_estimate, PilotConfig, RateFunction};
use crate::seed;
use crate::sensing::{draw_plan, DesignEnsemble, DesignKind};

/// Smallest grid value whose worst-cell coverage reaches `target`.
/// `cells[c][rep]` is the covering threshold of a replication.
pub fn grid_minimum(name: &str, cells: &[Vec<f64>], grid: &[f64], target: f64) -> Result<f64> {
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for &g in &grid {
        let cover = cells
            .iter()
            .map(|c| c.iter().filter(|&&t| t <= g).count() as f64 / c.len().max(1) as f64)
            .fold(f64::INFINITY, f64::min);
        if cover >= target {
            return Ok(g);
        }
        if cover > best.0 {
            best = (cover, g);
        }
    }
    Err(Error::CalibrationUnreachable { constant: name.to_string(), target, best: best.0, value: best.1 })
}

#[derive(Clone, Debug)]
pub struct FrobeniusFixture {
    pub design: DesignKind,
    pub eta: EtaKind,
    pub rs: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub d: usize,
    pub reps: usize,
    pub seed: u64,
}

/// Calibrates `C_UStat` (method `UStat`) or `C_RSS` (method `Rss`) with the
/// primed constant held at its value in `base`.
pub fn calibrate_frobenius(fx: &FrobeniusFixture, method: Method, base: &SimulationConstants, grid: &[f64], target: f64) -> Result<f64> {
    let mut cells = Vec::new();
    for &r in &fx.rs {
        let spec = ExperimentSpec {
            design: DesignEnsemble::new(fx.design, fx.d)?,
            eta_kind: fx.eta,
            r,
            n_grid: fx.n_grid.clone(),
            reps: fx.reps,
            d: fx.d,
            seed: fx.seed,
            regime: Regime::Simulation,
            constants: *base,
            alpha: 0.05,
        };
        spec.validate()?;
        for &n in &fx.n_grid {
            let nf = n as f64;
            let cell = replications(&spec, n)?
                .iter()
                .map(|rep| match method {
                    // R <= R^ + C d/n + C' sqrt(R)/sqrt(n)
                    Method::UStat => (r - rep.ustat - base.c_ustat_prime * r.sqrt() / nf.sqrt()) * nf / fx.d as f64,
                    // R <= r^ + C/sqrt(n) + C' sqrt(R)/sqrt(n)
                    _ => (r - rep.rss - base.c_rss_prime * r.sqrt() / nf.sqrt()) * nf.sqrt(),
                })
                .collect();
            cells.push(cell);
        }
    }
    let name = if method == Method::UStat { "C_UStat" } else { "C_RSS" };
    grid_minimum(name, &cells, grid, target)
}

/// Two-batch low-rank fixture used for `D`, `c_v` and the nuclear radius.
#[derive(Clone, Debug)]
pub struct NuclearFixture {
    pub design: DesignKind,
    pub d: usize,
    /// Size of each batch.
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    pub reps: usize,
    pub seed: u64,
    pub delta: f64,
}

impl NuclearFixture {
    fn truth(&self, rng: &mut seed::Rng) -> Result<crate::matrix::QuantumState> {
        match self.design {
            DesignKind::PauliBasis => random_rank_k_state(self.d, self.k, rng),
            DesignKind::GaussianIsotropic => random_real_rank_k_state(self.d, self.k, rng),
        }
    }
}

/// `(1 - 2 delta/3)` empirical quantile of `n |pilot - theta|_F^2 / (sigma^2 k d)`.
pub fn calibrate_pilot_d(fx: &NuclearFixture, pilot: &PilotConfig) -> Result<f64> {
    let ens = DesignEnsemble::new(fx.design, fx.d)?;
    let mut ratios = (0..fx.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seed::stream(fx.seed, &[seed::tag("pilot-D"), rep as u64]);
            let truth = fx.truth(&mut rng)?;
            let plan = draw_plan(ens, fx.n, &mut rng)?;
            let batch = measure_gaussian(&plan, truth.matrix(), fx.sigma, &mut rng)?;
            let est = pilot_estimate(&batch, pilot)?;
            let err = (&est - truth.matrix()).frobenius_norm_sq();
            Ok(fx.n as f64 * err / (fx.sigma * fx.sigma * (fx.k * fx.d) as f64))
        })
        .collect::<Result<Vec<f64>>>()?;
    ratios.sort_by(f64::total_cmp);
    let q = 1.0 - 2.0 * fx.delta / 3.0;
    let idx = ((q * ratios.len() as f64).ceil() as usize).clamp(1, ratios.len()) - 1;
    Ok(ratios[idx])
}

/// Per-replication thresholds of the nuclear-norm pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NuclearThresholds {
    pub k_hat: usize,
    /// Smallest radius constant `C` covering the truth.
    pub c_min: f64,
    /// Smallest `c_v` for which every partial-sum bound holds.
    pub c_v_min: f64,
}

pub fn nuclear_thresholds(fx: &NuclearFixture, big_d: f64, pilot: &PilotConfig, rep: usize) -> Result<NuclearThresholds> {
    let ens = DesignEnsemble::new(fx.design, fx.d)?;
    let mut rng = seed::stream(fx.seed, &[seed::tag("nuclear"), rep as u64]);
    let truth = fx.truth(&mut rng)?;
    let b1 = measure_gaussian(&draw_plan(ens, fx.n, &mut rng)?, truth.matrix(), fx.sigma, &mut rng)?;
    let b2 = measure_gaussian(&draw_plan(ens, fx.n, &mut rng)?, truth.matrix(), fx.sigma, &mut rng)?;
    let cfg = NuclearSetConfig::new(1.0, 1.0, RateFunction::new(big_d, fx.sigma, fx.d, fx.n)?)?;
    let out = nuclear_pipeline(&b1, &b2, pilot, &cfg, fx.delta)?;
    let c_min = out.report.distance(truth.matrix()) / out.report.radius();
    let eig = truth.matrix().eigenvalues();
    let (mut a, mut b, mut c_v_min) = (0.0, 0.0, 0.0f64);
    for (j, (x, y)) in out.estimate.lambdas.iter().zip(&eig).enumerate() {
        a += x;
        b += y;
        c_v_min = c_v_min.max((a - b).abs() / (2.0 * (j + 1) as f64 * out.estimate.v_n));
    }
    Ok(NuclearThresholds { k_hat: out.report.k_hat.unwrap(), c_min, c_v_min })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NuclearCalibration {
    pub c_v: f64,
    pub c: f64,
}

pub fn calibrate_nuclear(
    fx: &NuclearFixture,
    big_d: f64,
    pilot: &PilotConfig,
    grid_c: &[f64],
    grid_cv: &[f64],
    target_cover: f64,
    target_partial: f64,
) -> Result<NuclearCalibration> {
    let th = (0..fx.reps)
        .into_par_iter()
        .map(|rep| nuclear_thresholds(fx, big_d, pilot, rep))
        .collect::<Result<Vec<_>>>()?;
    let c = grid_minimum("C_nuclear", &[th.iter().map(|t| t.c_min).collect()], grid_c, target_cover)?;
    let c_v = grid_minimum("c_v", &[th.iter().map(|t| t.c_v_min).collect()], grid_cv, target_partial)?;
    Ok(NuclearCalibration { c_v, c })
}

/// Declared fixture suite and targets for [`calibrate`].
#[derive(Clone, Debug)]
pub struct CalibrationSuite {
    pub frobenius: FrobeniusFixture,
    pub target_frobenius: f64,
    pub grid_frobenius: Vec<f64>,
    pub nuclear: NuclearFixture,
    pub target_partial: f64,
    pub grid_c: Vec<f64>,
    pub grid_cv: Vec<f64>,
    pub pilot: PilotConfig,
    pub base: SimulationConstants,
}

fn grid(step: f64, max: f64) -> Vec<f64> {
    (1..=(max / step).round() as usize).map(|i| (i as f64 * step * 1e6).round() / 1e6).collect()
}

impl CalibrationSuite {
    pub fn standard(seed: u64) -> Self {
        Self {
            frobenius: FrobeniusFixture {
                design: DesignKind::GaussianIsotropic,
                eta: EtaKind::RandomDirac,
                rs: vec![0.1, 1.0],
                n_grid: vec![100, 200, 500, 1000, 2000, 5000],
                d: 32,
                reps: 1000,
                seed,
            },
            target_frobenius: 0.95,
            grid_frobenius: grid(0.1, 10.0),
            nuclear: NuclearFixture {
                design: DesignKind::PauliBasis,
                d: 16,
                n: 8192,
                k: 2,
                sigma: 1.0,
                reps: 500,
                seed: seed::derive(seed, &[seed::tag("nuclear-suite")]),
                delta: 0.1,
            },
            target_partial: 0.98,
            grid_c: grid(0.05, 20.0),
            grid_cv: grid(0.01, 5.0),
            pilot: PilotConfig::default(),
            base: SimulationConstants::default(),
        }
    }
}

/// Runs the whole suite. `D` comes first since the nuclear set depends on it.
pub fn calibrate(suite: &CalibrationSuite) -> Result<Constants> {
    let mut out = Constants { lambda_scale: suite.pilot.lambda_scale, ..Constants::default() };
    let mut sim = suite.base;
    sim.c_ustat = calibrate_frobenius(&suite.frobenius, Method::UStat, &suite.base, &suite.grid_frobenius, suite.target_frobenius)?;
    sim.c_rss = calibrate_frobenius(&suite.frobenius, Method::Rss, &suite.base, &suite.grid_frobenius, suite.target_frobenius)?;
    out.sim = sim;
    let nf = &suite.nuclear;
    let big_d = calibrate_pilot_d(nf, &suite.pilot)?;
    out.big_d = big_d;
    out.per_fixture.insert(fixture_key("D", nf.design, nf.sigma), big_d);
    let nuc = calibrate_nuclear(nf, big_d, &suite.pilot, &suite.grid_c, &suite.grid_cv, 1.0 - nf.delta, suite.target_partial)?;
    out.c_v = nuc.c_v;
    out.c_nuclear = nuc.c;
    Ok(out)
}
