//! Pilot accuracy on the d=32 Gaussian-design fixture.

use lowrank_uq::matrix::random_real_rank_k_state;
use lowrank_uq::measurement::measure_gaussian;
use lowrank_uq::recovery::{pilot_fit, PilotConfig};
use lowrank_uq::seed;
use lowrank_uq::sensing::{draw_plan, DesignEnsemble};
use rayon::prelude::*;

/// `n |theta~ - theta|_F^2 / (sigma^2 d)` per replication.
fn ratios(reps: u64, lambda_scale: f64) -> Vec<f64> {
    let (d, n, sigma) = (32usize, 2000usize, 0.1);
    let ens = DesignEnsemble::gaussian(d).unwrap();
    let cfg = PilotConfig { lambda_scale, ..PilotConfig::default() };
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::stream(2000, &[r]);
            let rho = random_real_rank_k_state(d, 1, &mut rng).unwrap();
            let plan = draw_plan(ens, n, &mut rng).unwrap();
            let b = measure_gaussian(&plan, rho.matrix(), sigma, &mut rng).unwrap();
            let fit = pilot_fit(&b, &cfg).unwrap();
            n as f64 * fit.estimate.dist_frobenius(rho.matrix()).powi(2) / (sigma * sigma * d as f64)
        })
        .collect()
}

#[test]
fn pilot_within_five_sigma2_d_over_n() {
    let reps = std::env::var("PILOT_FIXTURE_REPS").ok().and_then(|s| s.parse().ok()).unwrap_or(200);
    let mut r = ratios(reps, 1.0);
    r.sort_by(f64::total_cmp);
    let hit = r.iter().filter(|&&x| x <= 5.0).count();
    // D: the 90% quantile of the normalized error
    let d90 = r[((0.9 * reps as f64).ceil() as usize).max(1) - 1];
    println!("pilot fixture: {hit}/{reps} within 5 sigma^2 d/n, D90 = {d90:.3}, median {:.3}", r[r.len() / 2]);
    assert!(hit as f64 >= 0.9 * reps as f64, "{hit}/{reps}");
}
