//! Simulation harness for the `eta` experiments: `Y_i = tr(X^i eta) + eps_i`
//! with unit Gaussian noise, statistics centred at zero, and coverage of
//! `R = |eta|_F^2` by the RSS and U-statistic sets.

mod calibrate;
mod config;

pub use calibrate::{
    calibrate, calibrate_frobenius, calibrate_nuclear, calibrate_pilot_d, grid_minimum, CalibrationSuite, FrobeniusFixture,
    nuclear_thresholds, NuclearCalibration, NuclearFixture, NuclearThresholds,
};
pub use config::SimulationConfig;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frobenius::{
    pauli_z_constant, rss_radius_sq, rss_simulation_radius_sq, rss_statistic, rss_table_radius, ustat_radius_sq,
    ustat_statistic, ustat_table_radius, Method, Regime, RssMode, SimulationConstants, UStatConstants,
};
use crate::matrix::HermitianMatrix;
use crate::measurement::{MeasurementBatch, NoiseModel};
use crate::seed;
use crate::sensing::{apply_sampling, draw_plan, DesignEnsemble, DesignKind, PauliString};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EtaKind {
    RandomDirac,
    RandomPauli,
}

impl EtaKind {
    pub fn label(&self) -> &'static str {
        match self {
            EtaKind::RandomDirac => "dirac",
            EtaKind::RandomPauli => "pauli",
        }
    }
}

impl fmt::Display for EtaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EtaKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirac" | "random-dirac" => Ok(EtaKind::RandomDirac),
            "pauli" | "random-pauli" => Ok(EtaKind::RandomPauli),
            other => Err(Error::InvalidParameter(format!("unknown eta kind {other:?}"))),
        }
    }
}

/// Position of the signal: a diagonal entry (`j`) or a Pauli index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EtaDraw {
    pub kind: EtaKind,
    pub position: usize,
}

fn draw_eta<R: Rng + ?Sized>(kind: EtaKind, d: usize, rng: &mut R) -> EtaDraw {
    let position = match kind {
        EtaKind::RandomDirac => rng.random_range(0..d),
        EtaKind::RandomPauli => rng.random_range(0..d * d),
    };
    EtaDraw { kind, position }
}

fn eta_matrix(draw: EtaDraw, r: f64, d: usize) -> Result<HermitianMatrix> {
    let s = r.sqrt();
    match draw.kind {
        EtaKind::RandomDirac => {
            let mut diag = vec![0.0; d];
            diag[draw.position] = s;
            Ok(HermitianMatrix::from_real_diagonal(&diag))
        }
        EtaKind::RandomPauli => {
            let qubits = d.trailing_zeros() as usize;
            Ok(PauliString::from_index(qubits, draw.position)?.to_matrix().scaled(s))
        }
    }
}

/// Random `eta` with `|eta|_F^2 = R`: one diagonal entry `sqrt(R)`, or
/// `sqrt(R)` times a uniformly drawn Pauli basis element.
pub fn make_eta<R: Rng + ?Sized>(kind: EtaKind, r: f64, d: usize, rng: &mut R) -> Result<HermitianMatrix> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("R = {r} must be positive")));
    }
    if d == 0 || (kind == EtaKind::RandomPauli && !d.is_power_of_two()) {
        return Err(Error::NotPowerOfTwo(d));
    }
    eta_matrix(draw_eta(kind, d, rng), r, d)
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub design: DesignEnsemble,
    pub eta_kind: EtaKind,
    pub r: f64,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub d: usize,
    pub seed: u64,
    pub regime: Regime,
    pub constants: SimulationConstants,
    /// Level of the theory-regime sets.
    pub alpha: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if self.design.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: self.design.dim() });
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] < 2 {
            return Err(Error::InvalidParameter("n_grid must be strictly increasing with entries >= 2".into()));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParameter(format!("R = {} must be positive", self.r)));
        }
        Ok(())
    }

    fn rep_seed(&self, n: usize, rep: usize) -> u64 {
        seed::derive(
            self.seed,
            &[seed::tag(self.design.kind().label()), seed::tag(self.eta_kind.label()), self.r.to_bits(), self.d as u64, n as u64, rep as u64],
        )
    }
}

/// Statistics of one replication, both centred at zero with `sigma = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Replication {
    pub rss: f64,
    pub ustat: f64,
}

/// Gaussian design in orthonormal coordinates: `X^i` has i.i.d. N(0,1)
/// coordinates and `eta = sqrt(R) e_pos`, so `Y_i = sqrt(R) x_pos + eps_i`.
/// For the Dirac case the coordinates are the matrix entries, so this is the
/// real Gaussian design itself; the Pauli case uses Pauli coordinates.
fn gaussian_replication<R: Rng + ?Sized>(d: usize, n: usize, pos: usize, r: f64, rng: &mut R) -> Replication {
    let dd = d * d;
    let s = r.sqrt();
    let mut x = vec![0.0f64; dd];
    let mut acc = vec![0.0f64; dd];
    let (mut sum_y2, mut sum_y2x2) = (0.0, 0.0);
    for _ in 0..n {
        let mut xx = 0.0;
        for v in x.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *v = g;
            xx += g * g;
        }
        let eps: f64 = StandardNormal.sample(rng);
        let y = s * x[pos] + eps;
        for (a, &v) in acc.iter_mut().zip(&x) {
            *a += y * v;
        }
        sum_y2 += y * y;
        sum_y2x2 += y * y * xx;
    }
    let nf = n as f64;
    let total: f64 = acc.iter().map(|a| a * a).sum();
    Replication { rss: sum_y2 / nf - 1.0, ustat: (total - sum_y2x2) / (nf * (nf - 1.0)) }
}

fn pauli_replication<R: Rng + ?Sized>(spec: &ExperimentSpec, n: usize, eta: &HermitianMatrix, rng: &mut R) -> Result<Replication> {
    let plan = draw_plan(spec.design, n, rng)?;
    let mut y = apply_sampling(&plan, eta)?;
    for v in &mut y {
        let e: f64 = StandardNormal.sample(rng);
        *v += e;
    }
    let batch = MeasurementBatch::from_parts(plan, y, NoiseModel::Gaussian { sigma: 1.0 }, 0)?;
    let zero = HermitianMatrix::zeros(spec.d);
    Ok(Replication { rss: rss_statistic(&batch, &zero, 1.0)?, ustat: ustat_statistic(&batch, &zero)? })
}

/// One replication at sample size `n`, seeded from `(seed, design, eta, R, d, n, rep)`.
/// Both methods see the same data.
pub fn replicate(spec: &ExperimentSpec, n: usize, rep: usize) -> Result<Replication> {
    let mut rng = seed::rng_from(spec.rep_seed(n, rep));
    let draw = draw_eta(spec.eta_kind, spec.d, &mut rng);
    match spec.design.kind() {
        DesignKind::GaussianIsotropic => {
            let pos = match draw.kind {
                EtaKind::RandomDirac => draw.position * spec.d + draw.position,
                EtaKind::RandomPauli => draw.position,
            };
            Ok(gaussian_replication(spec.d, n, pos, spec.r, &mut rng))
        }
        DesignKind::PauliBasis => {
            let eta = eta_matrix(draw, spec.r, spec.d)?;
            pauli_replication(spec, n, &eta, &mut rng)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub n: usize,
    pub r: f64,
    pub coverage: f64,
    pub mean_diameter: f64,
    pub median_norm_err: f64,
    pub q05: f64,
    pub q95: f64,
}

pub const RESULT_CSV_HEADER: &str = "design,eta,R,method,n,coverage,mean_diameter,median_norm_err,q05,q95";

impl ResultRow {
    pub fn csv_row(&self, design: DesignKind, eta: EtaKind) -> String {
        format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            design.label(),
            eta,
            self.r,
            self.method,
            self.n,
            self.coverage,
            self.mean_diameter,
            self.median_norm_err,
            self.q05,
            self.q95
        )
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(radius_sq, reported diameter)` for one statistic. The reported value is
/// the plug-in bracket itself, i.e. the squared plug-in radius.
fn set_size(spec: &ExperimentSpec, method: Method, stat: f64, n: usize) -> Result<(f64, f64)> {
    let c = &spec.constants;
    Ok(match (spec.regime, method) {
        (Regime::Simulation, Method::UStat) => (
            ustat_radius_sq(stat, n, spec.d, UStatConstants::simulation(c)),
            ustat_table_radius(stat, n, spec.d, c.c_ustat, c.c_ustat_prime).powi(2),
        ),
        (Regime::Simulation, _) => {
            (rss_simulation_radius_sq(stat, n, 1.0, c), rss_table_radius(stat, n, c.c_rss, c.c_rss_prime).powi(2))
        }
        (Regime::Theory, Method::UStat) => {
            let r = ustat_radius_sq(stat, n, spec.d, UStatConstants::theory(spec.alpha)?);
            (r, r)
        }
        (Regime::Theory, _) => {
            let z = if spec.design.is_pauli() { pauli_z_constant(spec.alpha, 1.0)? } else { 0.0 };
            let r = rss_radius_sq(stat, n, spec.d, 1.0, spec.alpha, RssMode::ImplicitSolve, z)?;
            (r, r)
        }
    })
}

fn summarize(spec: &ExperimentSpec, method: Method, n: usize, stats: &[f64]) -> Result<ResultRow> {
    let mut covered = 0usize;
    let mut diam = 0.0;
    let mut errs = Vec::with_capacity(stats.len());
    for &s in stats {
        let (radius_sq, reported) = set_size(spec, method, s, n)?;
        covered += (spec.r <= radius_sq) as usize;
        diam += reported;
        errs.push((s - spec.r).abs().sqrt() / spec.r.sqrt());
    }
    errs.sort_by(f64::total_cmp);
    let reps = stats.len() as f64;
    Ok(ResultRow {
        method,
        n,
        r: spec.r,
        coverage: covered as f64 / reps,
        mean_diameter: diam / reps,
        median_norm_err: quantile_sorted(&errs, 0.5),
        q05: quantile_sorted(&errs, 0.05),
        q95: quantile_sorted(&errs, 0.95),
    })
}

/// All replications for one `n`, in replication order.
pub fn replications(spec: &ExperimentSpec, n: usize) -> Result<Vec<Replication>> {
    (0..spec.reps).into_par_iter().map(|rep| replicate(spec, n, rep)).collect()
}

/// Rows for every `n` in the grid, U-statistic first.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(2 * spec.n_grid.len());
    for &n in &spec.n_grid {
        let reps = replications(spec, n)?;
        let u: Vec<f64> = reps.iter().map(|r| r.ustat).collect();
        let s: Vec<f64> = reps.iter().map(|r| r.rss).collect();
        rows.push(summarize(spec, Method::UStat, n, &u)?);
        rows.push(summarize(spec, Method::Rss, n, &s)?);
    }
    Ok(rows)
}

pub fn rows_to_csv(design: DesignKind, eta: EtaKind, rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULT_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row(design, eta));
        out.push('\n');
    }
    out
}

pub const TABLE_CSV_HEADER: &str = "design,eta,R,n,coverage_ustat,diameter_ustat,coverage_rss,diameter_rss";

/// Merged table: one line per `(design, eta, R, n)` with both methods side by side.
pub fn table_csv(results: &[(ExperimentSpec, Vec<ResultRow>)]) -> String {
    let mut out = String::from(TABLE_CSV_HEADER);
    out.push('\n');
    for (spec, rows) in results {
        for &n in &spec.n_grid {
            let find = |m: Method| rows.iter().find(|r| r.n == n && r.method == m);
            if let (Some(u), Some(s)) = (find(Method::UStat), find(Method::Rss)) {
                out.push_str(&format!(
                    "{},{},{},{},{:.3},{:.3},{:.3},{:.3}\n",
                    spec.design.kind().label(),
                    spec.eta_kind,
                    spec.r,
                    n,
                    u.coverage,
                    u.mean_diameter,
                    s.coverage,
                    s.mean_diameter
                ));
            }
        }
    }
    out
}

/// File name of the per-experiment CSV.
pub fn experiment_file_name(spec: &ExperimentSpec) -> String {
    format!("{}_{}_R{}.csv", spec.design.kind().label(), spec.eta_kind, spec.r)
}
