//! Design ensembles and the sampling operator `theta -> (tr(X^i theta))_i`.

mod pauli;

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{haar_columns, CMatrix, HermitianMatrix};
use crate::seed;
use crate::tol;

pub use pauli::{pauli_basis_element, PauliString, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DesignKind {
    GaussianIsotropic,
    PauliBasis,
}

impl DesignKind {
    pub fn label(&self) -> &'static str {
        match self {
            DesignKind::GaussianIsotropic => "gaussian",
            DesignKind::PauliBasis => "pauli",
        }
    }
}

impl std::str::FromStr for DesignKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(DesignKind::GaussianIsotropic),
            "pauli" => Ok(DesignKind::PauliBasis),
            other => Err(Error::InvalidParameter(format!("unknown design {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignEnsemble {
    kind: DesignKind,
    dim: usize,
    coherence: f64,
}

impl DesignEnsemble {
    /// Real `d x d` matrices with i.i.d. standard normal entries.
    pub fn gaussian(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self { kind: DesignKind::GaussianIsotropic, dim: d, coherence: f64::NAN })
    }

    /// Uniform draws from `{d E_y}` over the normalized Pauli basis; `d = 2^N`.
    pub fn pauli(d: usize) -> Result<Self> {
        if !d.is_power_of_two() || d < 2 {
            return Err(Error::NotPowerOfTwo(d));
        }
        let qubits = d.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(Error::QubitCount(qubits));
        }
        Ok(Self { kind: DesignKind::PauliBasis, dim: d, coherence: 1.0 })
    }

    pub fn new(kind: DesignKind, d: usize) -> Result<Self> {
        match kind {
            DesignKind::GaussianIsotropic => Self::gaussian(d),
            DesignKind::PauliBasis => Self::pauli(d),
        }
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `K` with `|E_y|_op <= K / sqrt(d)`; `None` for the Gaussian design.
    pub fn coherence(&self) -> Option<f64> {
        (self.kind == DesignKind::PauliBasis).then_some(self.coherence)
    }

    pub fn qubits(&self) -> Option<usize> {
        (self.kind == DesignKind::PauliBasis).then(|| self.dim.trailing_zeros() as usize)
    }

    pub fn is_pauli(&self) -> bool {
        self.kind == DesignKind::PauliBasis
    }
}

#[derive(Clone, Debug)]
enum Draws {
    /// Draw `i` is stored block `i % base`; `base < n` only for paired plans.
    Gaussian { data: Arc<[f64]>, base: usize },
    Pauli { indices: Arc<[u32]> },
}

/// A design ensemble together with `n` realized draws.
#[derive(Clone, Debug)]
pub struct SensingPlan {
    ensemble: DesignEnsemble,
    n: usize,
    seed: u64,
    draws: Draws,
}

fn gaussian_blocks(d: usize, n: usize, plan_seed: u64) -> Arc<[f64]> {
    let mut rng = seed::rng_from(plan_seed);
    (0..n * d * d).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn pauli_indices(d: usize, n: usize, plan_seed: u64) -> Arc<[u32]> {
    let mut rng = seed::rng_from(plan_seed);
    let m = (d * d) as u32;
    (0..n).map(|_| rng.random_range(0..m)).collect()
}

/// Draws `n` design matrices. The plan is a pure function of one word taken
/// from `rng`, which is also what gets serialized.
pub fn draw_plan<R: Rng + ?Sized>(ensemble: DesignEnsemble, n: usize, rng: &mut R) -> Result<SensingPlan> {
    SensingPlan::from_seed(ensemble, n, rng.random())
}

/// Deterministic plan measuring every Pauli basis index exactly `m` times,
/// cycling through the basis.
pub fn full_basis_plan(ensemble: DesignEnsemble, m: usize) -> Result<SensingPlan> {
    if !ensemble.is_pauli() {
        return Err(Error::WrongDesign("Pauli"));
    }
    if m == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let dd = ensemble.dim * ensemble.dim;
    let indices: Arc<[u32]> = (0..m * dd).map(|i| (i % dd) as u32).collect();
    Ok(SensingPlan { ensemble, n: m * dd, seed: 0, draws: Draws::Pauli { indices } })
}

impl SensingPlan {
    pub fn from_seed(ensemble: DesignEnsemble, n: usize, plan_seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        let d = ensemble.dim;
        let draws = match ensemble.kind {
            DesignKind::GaussianIsotropic => Draws::Gaussian { data: gaussian_blocks(d, n, plan_seed), base: n },
            DesignKind::PauliBasis => Draws::Pauli { indices: pauli_indices(d, n, plan_seed) },
        };
        Ok(Self { ensemble, n, seed: plan_seed, draws })
    }

    /// Pauli plan with explicit indices.
    pub fn from_pauli_indices(ensemble: DesignEnsemble, indices: Vec<u32>) -> Result<Self> {
        if !ensemble.is_pauli() {
            return Err(Error::WrongDesign("Pauli"));
        }
        if indices.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        let dd = (ensemble.dim * ensemble.dim) as u32;
        if let Some(&bad) = indices.iter().find(|&&i| i >= dd) {
            return Err(Error::InvalidParameter(format!("Pauli index {bad} out of range [0, {dd})")));
        }
        Ok(Self { ensemble, n: indices.len(), seed: 0, draws: Draws::Pauli { indices: indices.into() } })
    }

    /// A plan of length `2n` whose draws `i` and `i + n` coincide.
    pub fn duplicated(&self) -> Self {
        let draws = match &self.draws {
            Draws::Gaussian { data, base } if *base == self.n => Draws::Gaussian { data: data.clone(), base: self.n },
            Draws::Gaussian { .. } => {
                let d2 = self.ensemble.dim * self.ensemble.dim;
                let mut buf = Vec::with_capacity(2 * self.n * d2);
                for _ in 0..2 {
                    for i in 0..self.n {
                        buf.extend_from_slice(self.gaussian_draw(i).unwrap());
                    }
                }
                Draws::Gaussian { data: buf.into(), base: 2 * self.n }
            }
            Draws::Pauli { indices } => Draws::Pauli { indices: indices.iter().chain(indices.iter()).copied().collect() },
        };
        Self { ensemble: self.ensemble, n: 2 * self.n, seed: self.seed, draws }
    }

    pub fn ensemble(&self) -> DesignEnsemble {
        self.ensemble
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.ensemble.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn pauli_indices(&self) -> Option<&[u32]> {
        match &self.draws {
            Draws::Pauli { indices } => Some(indices),
            Draws::Gaussian { .. } => None,
        }
    }

    /// Row-major entries of Gaussian draw `i`.
    pub fn gaussian_draw(&self, i: usize) -> Option<&[f64]> {
        match &self.draws {
            Draws::Gaussian { data, base } => {
                let d2 = self.ensemble.dim * self.ensemble.dim;
                let b = i % base;
                Some(&data[b * d2..(b + 1) * d2])
            }
            Draws::Pauli { .. } => None,
        }
    }

    /// Dense `X^i`.
    pub fn design_matrix(&self, i: usize) -> CMatrix {
        let d = self.ensemble.dim;
        match &self.draws {
            Draws::Gaussian { .. } => {
                let x = self.gaussian_draw(i).unwrap();
                CMatrix::from_fn(d, d, |r, c| Complex64::new(x[r * d + c], 0.0))
            }
            Draws::Pauli { indices } => {
                let mut m = CMatrix::zeros(d, d);
                self.pauli(indices[i]).add_scaled_into(&mut m, d as f64);
                m
            }
        }
    }

    pub(crate) fn pauli(&self, index: u32) -> PauliString {
        PauliString::from_index(self.ensemble.qubits().unwrap(), index as usize).expect("index checked on construction")
    }

    /// True when draws `i` and `i + n/2` coincide for every `i`; otherwise the
    /// first offending `i`.
    pub fn check_paired(&self) -> std::result::Result<(), usize> {
        if self.n % 2 != 0 {
            return Err(self.n / 2);
        }
        let h = self.n / 2;
        match &self.draws {
            Draws::Gaussian { base, .. } if *base == h => Ok(()),
            Draws::Gaussian { .. } => {
                (0..h).find(|&i| self.gaussian_draw(i) != self.gaussian_draw(i + h)).map_or(Ok(()), Err)
            }
            Draws::Pauli { indices } => (0..h).find(|&i| indices[i] != indices[i + h]).map_or(Ok(()), Err),
        }
    }

    /// Plan header `kind d n seed`, then one Pauli index per line. Gaussian
    /// draws are regenerated from the seed.
    pub fn to_text(&self) -> String {
        let kind = match &self.draws {
            Draws::Gaussian { base, .. } if *base < self.n => "gaussian-paired",
            _ => self.ensemble.kind.label(),
        };
        let mut out = format!("{kind} {} {} {}\n", self.ensemble.dim, self.n, self.seed);
        if let Draws::Pauli { indices } = &self.draws {
            for i in indices.iter() {
                let _ = writeln!(out, "{i}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty plan"))?;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::parse(1, "plan header must be `kind d n seed`"));
        }
        let num = |s: &str, what: &str| s.parse::<u64>().map_err(|_| Error::parse(1, format!("bad {what} {s:?}")));
        let (d, n, plan_seed) = (num(f[1], "d")? as usize, num(f[2], "n")? as usize, num(f[3], "seed")?);
        match f[0] {
            "gaussian" => Self::from_seed(DesignEnsemble::gaussian(d)?, n, plan_seed),
            "gaussian-paired" => {
                if n % 2 != 0 {
                    return Err(Error::parse(1, "paired plan needs even n"));
                }
                Ok(Self::from_seed(DesignEnsemble::gaussian(d)?, n / 2, plan_seed)?.duplicated())
            }
            "pauli" => {
                let mut idx = Vec::with_capacity(n);
                for (ln, l) in lines {
                    idx.push(l.trim().parse::<u32>().map_err(|_| Error::parse(ln + 1, format!("bad index {l:?}")))?);
                }
                if idx.len() != n {
                    return Err(Error::parse(1, format!("header says n = {n} but {} indices follow", idx.len())));
                }
                let mut plan = Self::from_pauli_indices(DesignEnsemble::pauli(d)?, idx)?;
                plan.seed = plan_seed;
                Ok(plan)
            }
            other => Err(Error::parse(1, format!("unknown plan kind {other:?}"))),
        }
    }
}

/// `(tr(X^i A))_i`; errors if any component has a non-negligible imaginary part.
pub fn apply_sampling(plan: &SensingPlan, a: &HermitianMatrix) -> Result<Vec<f64>> {
    let d = plan.dim();
    a.check_dim(d)?;
    let m = a.as_matrix();
    match &plan.draws {
        Draws::Gaussian { .. } => {
            // tr(X A) = sum_{r,c} X[r,c] A[c,r]
            let mut at_re = vec![0.0; d * d];
            let mut at_im = vec![0.0; d * d];
            for r in 0..d {
                for c in 0..d {
                    at_re[r * d + c] = m[(c, r)].re;
                    at_im[r * d + c] = m[(c, r)].im;
                }
            }
            let has_imag = at_im.iter().any(|&v| v != 0.0);
            let scale = a.frobenius_norm().max(1.0);
            (0..plan.n)
                .map(|i| {
                    let x = plan.gaussian_draw(i).unwrap();
                    let re: f64 = x.iter().zip(&at_re).map(|(p, q)| p * q).sum();
                    if has_imag {
                        let im: f64 = x.iter().zip(&at_im).map(|(p, q)| p * q).sum();
                        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if im.abs() > tol::IMAG * scale * xn.max(1.0) {
                            return Err(Error::ComplexMeasurement(im));
                        }
                    }
                    Ok(re)
                })
                .collect()
        }
        Draws::Pauli { indices } => {
            let df = d as f64;
            let bound = tol::IMAG * a.frobenius_norm().max(1.0);
            indices
                .iter()
                .map(|&j| {
                    let t = plan.pauli(j).trace_with(m);
                    if t.im.abs() > bound {
                        return Err(Error::ComplexMeasurement(t.im));
                    }
                    Ok(df * t.re)
                })
                .collect()
        }
    }
}

/// `(1/n) sum_i y_i X^i`, Hermitized.
pub fn adjoint_average(plan: &SensingPlan, y: &[f64]) -> Result<HermitianMatrix> {
    if y.len() != plan.n {
        return Err(Error::LengthMismatch { expected: plan.n, actual: y.len() });
    }
    let d = plan.dim();
    let n = plan.n as f64;
    match &plan.draws {
        Draws::Gaussian { .. } => {
            let mut acc = vec![0.0; d * d];
            for (i, &yi) in y.iter().enumerate() {
                if yi == 0.0 {
                    continue;
                }
                for (s, x) in acc.iter_mut().zip(plan.gaussian_draw(i).unwrap()) {
                    *s += yi * x;
                }
            }
            let m = CMatrix::from_fn(d, d, |r, c| Complex64::new(acc[r * d + c] / n, 0.0));
            Ok(HermitianMatrix::hermitize(m))
        }
        Draws::Pauli { indices } => {
            let mut coef = vec![0.0; d * d];
            for (&j, &yi) in indices.iter().zip(y) {
                coef[j as usize] += yi;
            }
            let mut m = CMatrix::zeros(d, d);
            for (j, &cj) in coef.iter().enumerate() {
                if cj != 0.0 {
                    plan.pauli(j as u32).add_scaled_into(&mut m, d as f64 * cj / n);
                }
            }
            Ok(HermitianMatrix::hermitize(m))
        }
    }
}

/// `|(1/n)|X theta|^2 / |theta|_F^2 - 1|` for one fixed direction.
pub fn rip_statistic(plan: &SensingPlan, theta: &HermitianMatrix) -> Result<f64> {
    let f2 = theta.frobenius_norm_sq();
    if f2 == 0.0 {
        return Err(Error::InvalidParameter("RIP direction must be nonzero".into()));
    }
    let y = apply_sampling(plan, theta)?;
    let q = y.iter().map(|v| v * v).sum::<f64>() / plan.n as f64;
    Ok((q / f2 - 1.0).abs())
}

/// Monte Carlo lower bound on the rank-`k` restricted isometry constant: the
/// largest deviation over `trials` random rank-`k` unit-Frobenius directions,
/// all evaluated on one fresh plan.
pub fn empirical_rip<R: Rng + ?Sized>(
    ensemble: DesignEnsemble,
    n: usize,
    k: usize,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let d = ensemble.dim;
    if k == 0 || k > d {
        return Err(Error::RankOutOfRange { k, dim: d });
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let plan = draw_plan(ensemble, n, rng)?;
    let real = ensemble.kind == DesignKind::GaussianIsotropic;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let v = haar_columns(d, k, real, rng);
        let w: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        let theta = HermitianMatrix::from_weighted_projectors(&v, &w);
        worst = worst.max(rip_statistic(&plan, &theta)?);
    }
    Ok(worst)
}
