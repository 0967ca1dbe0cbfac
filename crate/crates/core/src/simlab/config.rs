use std::str::FromStr;

use super::{EtaKind, ExperimentSpec};
use crate::error::{Error, Result};
use crate::frobenius::{Regime, SimulationConstants};
use crate::sensing::{DesignEnsemble, DesignKind};

/// Top-level `key=value` experiment config. `design`, `eta`, `R` and
/// `n_grid` take comma-separated lists; the experiments are their product.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub designs: Vec<DesignKind>,
    pub etas: Vec<EtaKind>,
    pub rs: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub d: usize,
    pub seed: u64,
    pub regime: Regime,
    /// Optional constants file, resolved by the caller.
    pub constants_file: Option<String>,
    pub alpha: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            designs: vec![DesignKind::GaussianIsotropic, DesignKind::PauliBasis],
            etas: vec![EtaKind::RandomDirac, EtaKind::RandomPauli],
            rs: vec![0.1, 1.0],
            n_grid: vec![100, 200, 500, 1000, 2000, 5000],
            reps: 1000,
            d: 32,
            seed: 1,
            regime: Regime::Simulation,
            constants_file: None,
            alpha: 0.05,
        }
    }
}

fn list<T: FromStr>(v: &str, line: usize) -> Result<Vec<T>> {
    v.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| Error::parse(line, format!("bad list entry {s:?}"))))
        .collect()
}

fn one<T: FromStr>(v: &str, line: usize) -> Result<T> {
    v.parse().map_err(|_| Error::parse(line, format!("bad value {v:?}")))
}

impl SimulationConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = SimulationConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(ln, "expected key=value"))?;
            let v = v.trim();
            match k.trim() {
                "design" => c.designs = list(v, ln)?,
                "eta" => c.etas = list(v, ln)?,
                "R" => c.rs = list(v, ln)?,
                "n_grid" => c.n_grid = list(v, ln)?,
                "reps" => c.reps = one(v, ln)?,
                "d" => c.d = one(v, ln)?,
                "seed" => c.seed = one(v, ln)?,
                "constants" => c.regime = one(v, ln)?,
                "constants_file" => c.constants_file = Some(v.to_string()),
                "alpha" => c.alpha = one(v, ln)?,
                other => return Err(Error::parse(ln, format!("unknown key {other:?}"))),
            }
        }
        Ok(c)
    }

    /// One spec per `(design, eta, R)`, in config order.
    pub fn experiments(&self, constants: SimulationConstants) -> Result<Vec<ExperimentSpec>> {
        let mut out = Vec::new();
        for &design in &self.designs {
            let ens = DesignEnsemble::new(design, self.d)?;
            for &eta_kind in &self.etas {
                for &r in &self.rs {
                    let spec = ExperimentSpec {
                        design: ens,
                        eta_kind,
                        r,
                        n_grid: self.n_grid.clone(),
                        reps: self.reps,
                        d: self.d,
                        seed: self.seed,
                        regime: self.regime,
                        constants,
                        alpha: self.alpha,
                    };
                    spec.validate()?;
                    out.push(spec);
                }
            }
        }
        Ok(out)
    }
}
