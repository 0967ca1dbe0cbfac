use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use lowrank_uq::certify::{run_certificate_simulated, CertificateConfig, EPOCH_CSV_HEADER};
use lowrank_uq::constants::Constants;
use lowrank_uq::frobenius::Regime;
use lowrank_uq::matrix::{random_rank_k_state, random_real_rank_k_state};
use lowrank_uq::measurement::NoiseModel;
use lowrank_uq::seed;
use lowrank_uq::sensing::{DesignEnsemble, DesignKind};
use lowrank_uq::simlab::{self, CalibrationSuite, SimulationConfig};

#[derive(Parser)]
#[command(name = "lowrank-uq", version, about = "Low-rank trace regression with confidence sets and stopping certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the eta experiments and write per-experiment and merged table CSVs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo calibration of the empirical constants.
    Calibrate {
        /// Constants file to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.95)]
        target: f64,
        /// Replications per Frobenius fixture cell.
        #[arg(long)]
        frobenius_reps: Option<usize>,
        /// Replications of the nuclear-norm fixture.
        #[arg(long)]
        nuclear_reps: Option<usize>,
        /// Overrides the Frobenius fixture sample sizes (comma separated).
        #[arg(long, value_delimiter = ',')]
        n_grid: Option<Vec<usize>>,
    },
    /// Run one sequential certificate on a simulated random state.
    Certify {
        /// Dimension; a power of two for the Pauli design.
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        rank: usize,
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        /// Target Frobenius accuracy.
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value = "pauli")]
        design: DesignKind,
        /// `gaussian` (level from --sigma) or `bernoulli:T`.
        #[arg(long, default_value = "gaussian")]
        noise: String,
        #[arg(long, default_value = "simulation")]
        constants: Regime,
        /// Calibrated constants for the simulation regime and the pilot.
        #[arg(long)]
        constants_file: Option<PathBuf>,
        /// Extra epochs added to ceil(log2(d/eps)).
        #[arg(long, default_value_t = 2)]
        margin: usize,
        /// Epoch cap; defaults to T.
        #[arg(long)]
        t_max: Option<usize>,
        /// Gaussian designs: U-statistic sets once 2^m >= d^2.
        #[arg(long)]
        isotropic_ustat: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Epoch log, appended to.
        #[arg(long, default_value = "certify_epochs.csv")]
        log: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Calibrate { out, seed, target, frobenius_reps, nuclear_reps, n_grid } => {
            let mut suite = CalibrationSuite::standard(seed);
            suite.target_frobenius = target;
            if let Some(r) = frobenius_reps {
                suite.frobenius.reps = r;
            }
            if let Some(r) = nuclear_reps {
                suite.nuclear.reps = r;
            }
            if let Some(g) = n_grid {
                suite.frobenius.n_grid = g;
            }
            let constants = simlab::calibrate(&suite)?;
            let text = constants.to_text();
            fs::write(&out, &text).with_context(|| format!("writing {}", out.display()))?;
            print!("{text}");
            Ok(())
        }
        Command::Certify {
            d,
            rank,
            sigma,
            eps,
            delta,
            design,
            noise,
            constants,
            constants_file,
            margin,
            t_max,
            isotropic_ustat,
            seed,
            log,
        } => {
            let noise = if noise.trim() == "gaussian" { NoiseModel::Gaussian { sigma } } else { noise.parse()? };
            let args = CertifyArgs { d, rank, eps, delta, design, noise, regime: constants, margin, t_max, isotropic_ustat, seed };
            certify(&args, constants_file.as_deref(), &log)
        }
    }
}

fn load_constants(path: Option<&Path>) -> Result<Constants> {
    match path {
        Some(p) => Constants::load(p).with_context(|| format!("reading constants {}", p.display())),
        None => Ok(Constants::default()),
    }
}

fn simulate(config: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg = SimulationConfig::from_text(&text)?;
    if let Ok(s) = std::env::var("LOWRANK_UQ_SEED") {
        cfg.seed = s.trim().parse().context("LOWRANK_UQ_SEED must be an unsigned integer")?;
    }
    let constants = match &cfg.constants_file {
        Some(f) => load_constants(Some(&config.parent().unwrap_or(Path::new(".")).join(f)))?.sim,
        None => Constants::default().sim,
    };
    fs::create_dir_all(out)?;
    let mut results = Vec::new();
    for spec in cfg.experiments(constants)? {
        let rows = simlab::run_experiment(&spec)?;
        let path = out.join(simlab::experiment_file_name(&spec));
        fs::write(&path, simlab::rows_to_csv(spec.design.kind(), spec.eta_kind, &rows))?;
        eprintln!("wrote {}", path.display());
        results.push((spec, rows));
    }
    fs::write(out.join("tables.csv"), simlab::table_csv(&results))?;
    Ok(())
}

struct CertifyArgs {
    d: usize,
    rank: usize,
    eps: f64,
    delta: f64,
    design: DesignKind,
    noise: NoiseModel,
    regime: Regime,
    margin: usize,
    t_max: Option<usize>,
    isotropic_ustat: bool,
    seed: u64,
}

#[derive(Serialize)]
struct EpochJson {
    m: usize,
    budget: usize,
    method: String,
    statistic: f64,
    radius_sq: f64,
    diameter: f64,
}

#[derive(Serialize)]
struct CertificateJson {
    d: usize,
    rank: usize,
    design: &'static str,
    noise: String,
    regime: String,
    seed: u64,
    epsilon: f64,
    delta: f64,
    epochs_t: usize,
    t_max: usize,
    alpha: f64,
    n_hat: usize,
    stopped: bool,
    error_frobenius: f64,
    theta_hat_eigenvalues: Vec<f64>,
    epoch_log: Vec<EpochJson>,
}

fn certify(a: &CertifyArgs, constants_file: Option<&Path>, log: &Path) -> Result<()> {
    if a.rank == 0 || a.rank > a.d {
        bail!("rank must lie in 1..={}", a.d);
    }
    let consts = load_constants(constants_file)?;
    let ens = DesignEnsemble::new(a.design, a.d)?;
    let mut cfg = CertificateConfig::new(a.eps, a.delta, ens, a.noise, a.regime);
    cfg.margin = a.margin;
    cfg.t_max = a.t_max.unwrap_or_else(|| cfg.epochs());
    cfg.sim = consts.sim;
    cfg.pilot.lambda_scale = consts.lambda_scale;
    cfg.isotropic_ustat = a.isotropic_ustat;
    let mut rng = seed::stream(a.seed, &[seed::tag("truth")]);
    let truth = match a.design {
        DesignKind::PauliBasis => random_rank_k_state(a.d, a.rank, &mut rng)?,
        // real states keep Gaussian-design measurements real
        DesignKind::GaussianIsotropic => random_real_rank_k_state(a.d, a.rank, &mut rng)?,
    };
    let cert = run_certificate_simulated(&truth, &cfg, seed::derive(a.seed, &[seed::tag("certificate")]))?;
    let out = CertificateJson {
        d: a.d,
        rank: a.rank,
        design: a.design.label(),
        noise: a.noise.to_string(),
        regime: format!("{:?}", a.regime).to_lowercase(),
        seed: a.seed,
        epsilon: cert.epsilon,
        delta: cert.delta,
        epochs_t: cert.epochs_t,
        t_max: cfg.t_max,
        alpha: cert.alpha,
        n_hat: cert.n_hat,
        stopped: cert.stopped,
        error_frobenius: cert.theta_hat.matrix().dist_frobenius(truth.matrix()),
        theta_hat_eigenvalues: cert.theta_hat.matrix().eigenvalues(),
        epoch_log: cert
            .epoch_log
            .iter()
            .map(|e| EpochJson {
                m: e.m,
                budget: e.budget,
                method: e.method.to_string(),
                statistic: e.statistic,
                radius_sq: e.radius_sq,
                diameter: e.diameter,
            })
            .collect(),
    };
    println!("{}", serde_json::to_string(&out)?);
    let fresh = !log.exists() || fs::metadata(log)?.len() == 0;
    let mut f = OpenOptions::new().create(true).append(true).open(log).with_context(|| format!("opening {}", log.display()))?;
    if fresh {
        writeln!(f, "seed,d,rank,design,{EPOCH_CSV_HEADER}")?;
    }
    for e in &cert.epoch_log {
        writeln!(f, "{},{},{},{},{}", a.seed, a.d, a.rank, a.design.label(), e.csv_row())?;
    }
    Ok(())
}
