//! Noise channels turning `tr(X^i theta)` into observations.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::{HermitianMatrix, QuantumState};
use crate::sensing::{apply_sampling, DesignEnsemble, SensingPlan};
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    /// `T` repeated two-outcome measurements per Pauli observable.
    BernoulliPauli { t: u64 },
}

impl NoiseModel {
    /// Known bound `v` on the noise variance.
    pub fn variance_bound(&self, d: usize) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } => sigma * sigma,
            NoiseModel::BernoulliPauli { t } => d as f64 / t as f64,
        }
    }

    /// `sqrt` of [`variance_bound`](Self::variance_bound).
    pub fn sigma_bound(&self, d: usize) -> f64 {
        self.variance_bound(d).sqrt()
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            NoiseModel::BernoulliPauli { t } => write!(f, "bernoulli:{t}"),
        }
    }
}

impl FromStr for NoiseModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad noise descriptor {s:?} (gaussian:SIGMA or bernoulli:T)"));
        let (kind, val) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "gaussian" => {
                let sigma: f64 = val.parse().map_err(|_| bad())?;
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(bad());
                }
                Ok(NoiseModel::Gaussian { sigma })
            }
            "bernoulli" => match val.parse::<u64>() {
                Ok(t) if t >= 1 => Ok(NoiseModel::BernoulliPauli { t }),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

/// Observations `y` paired with the plan that produced them.
#[derive(Clone, Debug)]
pub struct MeasurementBatch {
    plan: SensingPlan,
    y: Vec<f64>,
    noise: NoiseModel,
    id: u64,
    pub true_state_tag: Option<String>,
}

impl MeasurementBatch {
    /// Wraps externally acquired data.
    pub fn from_parts(plan: SensingPlan, y: Vec<f64>, noise: NoiseModel, id: u64) -> Result<Self> {
        if y.len() != plan.n() {
            return Err(Error::LengthMismatch { expected: plan.n(), actual: y.len() });
        }
        Ok(Self { plan, y, noise, id, true_state_tag: None })
    }

    pub fn plan(&self) -> &SensingPlan {
        &self.plan
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.plan.dim()
    }

    pub fn ensemble(&self) -> DesignEnsemble {
        self.plan.ensemble()
    }

    /// Identity used to enforce sample splitting.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Comment header with `key=value` fields, a column header, then `i,design,y` rows.
    pub fn to_csv(&self) -> String {
        let header = self.plan.to_text();
        let head: Vec<&str> = header.lines().next().unwrap().split_whitespace().collect();
        let mut out = format!(
            "# kind={} d={} n={} noise={} seed={} id={}\ni,design,y\n",
            head[0], head[1], head[2], self.noise, head[3], self.id
        );
        let idx = self.plan.pauli_indices();
        for (i, y) in self.y.iter().enumerate() {
            let design = idx.map_or(i, |v| v[i] as usize);
            let _ = writeln!(out, "{i},{design},{y}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines.next().ok_or_else(|| Error::parse(1, "empty batch"))?;
        let meta = first.strip_prefix('#').ok_or_else(|| Error::parse(1, "missing `#` metadata line"))?;
        let field = |key: &str| {
            meta.split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| Error::parse(1, format!("missing {key}=")))
        };
        let kind = field("kind")?;
        let d = field("d")?;
        let n: usize = field("n")?.parse().map_err(|_| Error::parse(1, "bad n"))?;
        let noise: NoiseModel = field("noise")?.parse()?;
        let seed = field("seed")?;
        let id: u64 = field("id")?.parse().map_err(|_| Error::parse(1, "bad id"))?;
        match lines.next() {
            Some((_, h)) if h.trim() == "i,design,y" => {}
            _ => return Err(Error::parse(2, "expected column header `i,design,y`")),
        }
        let mut designs = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for (ln, l) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::parse(ln + 1, "expected 3 columns"));
            }
            let i: usize = cols[0].trim().parse().map_err(|_| Error::parse(ln + 1, "bad row index"))?;
            if i != y.len() {
                return Err(Error::parse(ln + 1, format!("row index {i} out of order")));
            }
            designs.push(cols[1].trim().to_string());
            y.push(cols[2].trim().parse::<f64>().map_err(|_| Error::parse(ln + 1, "bad y value"))?);
        }
        if y.len() != n {
            return Err(Error::parse(1, format!("header says n = {n} but {} rows follow", y.len())));
        }
        let mut plan_text = format!("{kind} {d} {n} {seed}\n");
        if kind == "pauli" {
            for s in &designs {
                plan_text.push_str(s);
                plan_text.push('\n');
            }
        }
        let plan = SensingPlan::from_text(&plan_text)?;
        Self::from_parts(plan, y, noise, id)
    }
}

/// `y_i = tr(X^i theta) + N(0, sigma^2)`.
pub fn measure_gaussian<R: Rng + ?Sized>(
    plan: &SensingPlan,
    theta: &HermitianMatrix,
    sigma: f64,
    rng: &mut R,
) -> Result<MeasurementBatch> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise level {sigma} must be finite and nonnegative")));
    }
    let id = rng.random();
    let mut y = apply_sampling(plan, theta)?;
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        for v in &mut y {
            *v += normal.sample(rng);
        }
    }
    MeasurementBatch::from_parts(plan.clone(), y, NoiseModel::Gaussian { sigma }, id)
}

/// Each observation averages `T` outcomes `B in {-1, 1}` with
/// `P(B = 1) = (1 + sqrt(d) tr(E theta)) / 2`, scaled so `E y_i = d tr(E_i theta)`.
pub fn measure_bernoulli_pauli<R: Rng + ?Sized>(
    plan: &SensingPlan,
    theta: &QuantumState,
    t: u64,
    rng: &mut R,
) -> Result<MeasurementBatch> {
    if !plan.ensemble().is_pauli() {
        return Err(Error::WrongDesign("Pauli"));
    }
    if t == 0 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    let id = rng.random();
    let d = plan.dim() as f64;
    let mean = apply_sampling(plan, theta.matrix())?;
    let scale = d.sqrt() / t as f64;
    let mut y = Vec::with_capacity(mean.len());
    for m in mean {
        // tr(X theta) = d tr(E theta), so sqrt(d) tr(E theta) = m / sqrt(d)
        let p = 0.5 * (1.0 + m / d.sqrt());
        if !(-tol::PROBABILITY..=1.0 + tol::PROBABILITY).contains(&p) {
            return Err(Error::InvalidState { p });
        }
        let ones = Binomial::new(t, p.clamp(0.0, 1.0)).expect("p clamped into [0, 1]").sample(rng);
        y.push(scale * (2.0 * ones as f64 - t as f64));
    }
    MeasurementBatch::from_parts(plan.clone(), y, NoiseModel::BernoulliPauli { t }, id)
}
