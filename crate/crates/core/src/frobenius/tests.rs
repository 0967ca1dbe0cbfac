use super::*;
use crate::matrix::{random_rank_k_state, random_real_rank_k_state};
use crate::measurement::{measure_gaussian, NoiseModel};
use crate::seed::rng_from;
use crate::sensing::{draw_plan, full_basis_plan, DesignEnsemble, SensingPlan};
use proptest::prelude::*;

/// Naive `O(n^2)` double sum over `<a_i, a_j>` with dense design matrices.
fn naive_ustat(batch: &MeasurementBatch, center: &HermitianMatrix) -> f64 {
    let n = batch.n();
    let a: Vec<CMatrix> = (0..n)
        .map(|i| batch.plan().design_matrix(i) * Complex64::new(batch.y()[i], 0.0) - center.as_matrix())
        .collect();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += a[i].iter().zip(a[j].iter()).map(|(p, q)| (p.conj() * q).re).sum::<f64>();
        }
    }
    2.0 * s / (n * (n - 1)) as f64
}

#[test]
fn ustat_matches_naive_double_sum() {
    let mut rng = rng_from(1);
    for trial in 0..100 {
        let d = [2, 4][trial % 2];
        let n = 2 + trial % 19;
        let pauli = trial % 3 == 0;
        let ens = if pauli { DesignEnsemble::pauli(d).unwrap() } else { DesignEnsemble::gaussian(d).unwrap() };
        let plan = draw_plan(ens, n, &mut rng).unwrap();
        let (theta, center) = if pauli {
            (random_rank_k_state(d, 1, &mut rng).unwrap(), random_rank_k_state(d, 2, &mut rng).unwrap())
        } else {
            (random_real_rank_k_state(d, 1, &mut rng).unwrap(), random_real_rank_k_state(d, 2, &mut rng).unwrap())
        };
        let b = measure_gaussian(&plan, theta.matrix(), 0.3, &mut rng).unwrap();
        let fast = ustat_statistic(&b, center.matrix()).unwrap();
        let slow = naive_ustat(&b, center.matrix());
        assert!((fast - slow).abs() <= 1e-10 * slow.abs().max(1.0), "fast {fast} slow {slow}");
    }
}

#[test]
fn ustat_zero_data() {
    let mut rng = rng_from(2);
    let plan = draw_plan(DesignEnsemble::gaussian(3).unwrap(), 5, &mut rng).unwrap();
    let b = MeasurementBatch::from_parts(plan, vec![0.0; 5], NoiseModel::Gaussian { sigma: 1.0 }, 1).unwrap();
    assert_eq!(ustat_statistic(&b, &HermitianMatrix::zeros(3)).unwrap(), 0.0);
    let one = MeasurementBatch::from_parts(
        draw_plan(DesignEnsemble::gaussian(3).unwrap(), 1, &mut rng).unwrap(),
        vec![1.0],
        NoiseModel::Gaussian { sigma: 1.0 },
        2,
    )
    .unwrap();
    assert!(matches!(ustat_statistic(&one, &HermitianMatrix::zeros(3)), Err(Error::TooFewSamples { .. })));
}

#[test]
fn rss_examples() {
    let mut rng = rng_from(3);
    let rho = random_rank_k_state(4, 1, &mut rng).unwrap();
    let plan = draw_plan(DesignEnsemble::pauli(4).unwrap(), 40, &mut rng).unwrap();
    let b = measure_gaussian(&plan, rho.matrix(), 0.0, &mut rng).unwrap();
    assert_eq!(rss_statistic(&b, rho.matrix(), 0.0).unwrap(), 0.0);

    // n = 1, Y = 2, tr(X center) = 1, sigma = 1
    let ens = DesignEnsemble::pauli(2).unwrap();
    let plan = SensingPlan::from_pauli_indices(ens, vec![0]).unwrap();
    let center = HermitianMatrix::identity(2).scaled(0.5 / 2f64.sqrt());
    assert!((apply_sampling(&plan, &center).unwrap()[0] - 1.0).abs() < 1e-15);
    let b = MeasurementBatch::from_parts(plan, vec![2.0], NoiseModel::Gaussian { sigma: 1.0 }, 3).unwrap();
    assert!(rss_statistic(&b, &center, 1.0).unwrap().abs() < 1e-14);
}

#[test]
fn rss_radius_limits() {
    // z = 0, sigma = 0: only the doubled statistic remains
    for mode in [RssMode::ShapeConstrained, RssMode::ImplicitSolve] {
        let r = rss_radius_sq(0.7, 50, 4, 0.0, 0.05, mode, 0.0).unwrap();
        assert!((r - 1.4).abs() < 1e-12);
    }
    // both modes agree once the max sits at 4zd/n; that needs 3x <= 4zd/n,
    // i.e. a statistic well below -zd/(3n)
    let z = 5000.0;
    let a = rss_radius_sq(-150.0, 100, 4, 0.3, 0.05, RssMode::ShapeConstrained, z).unwrap();
    let b = rss_radius_sq(-150.0, 100, 4, 0.3, 0.05, RssMode::ImplicitSolve, z).unwrap();
    assert!(3.0 * b <= 4.0 * z * 4.0 / 100.0);
    assert!((a - b).abs() < 1e-9 * a, "{a} {b}");
}

#[test]
fn implicit_radius_is_largest_root() {
    let (stat, n, d, sigma, alpha) = (0.05, 64, 4, 0.5, 0.1);
    let r = rss_radius_sq(stat, n, d, sigma, alpha, RssMode::ImplicitSolve, 0.0).unwrap();
    let xi = xi_quantile(alpha / 3.0, sigma, n).unwrap();
    let zc = z_alpha(alpha / 3.0).unwrap();
    let nf = n as f64;
    let g = |x: f64| 2.0 * (stat + xi / nf.sqrt()) + 2.0 / nf.sqrt() * sigma * (zc * 3.0 * x).sqrt() - x;
    assert!(g(r).abs() < 1e-10);
    // nothing larger is admissible
    for k in 1..200 {
        assert!(g(r + k as f64 * 0.01) < 0.0);
    }
}

#[test]
fn largest_root_cases() {
    assert_eq!(largest_root(-1.0, 0.0, 1.0, 0.0), 0.0);
    assert!((largest_root(2.0, 0.0, 1.0, 0.0) - 2.0).abs() < 1e-15);
    // x = a + b sqrt(x) with a = 2, b = 1: sqrt(x) = 2
    assert!((largest_root(2.0, 1.0, 1.0, 0.0) - 4.0).abs() < 1e-12);
    // negative a with a real positive root pair
    let x = largest_root(-0.1, 1.0, 1.0, 0.0);
    assert!((x - (-0.1 + x.sqrt())).abs() < 1e-12 && x > 0.5);
}

#[test]
fn table_radius_examples() {
    assert!((rss_table_radius(0.0, 100, 1.0, 6.0) - 0.1f64.sqrt()).abs() < 1e-12);
    assert_eq!(rss_table_radius(-3.0, 100, 1.0, 6.0), rss_table_radius(0.0, 100, 1.0, 6.0));
    assert!((ustat_table_radius(0.0, 100, 32, 2.5, 6.0) - 0.8f64.sqrt()).abs() < 1e-12);
}

#[test]
fn ustat_radius_without_implicit_term() {
    let r = ustat_radius_sq(0.4, 100, 8, UStatConstants::Theory { c1: 0.0, c2: 3.0 });
    assert!((r - (0.4 + 3.0 * 8.0 / 100.0)).abs() < 1e-14);
    let r = ustat_radius_sq(-1.0, 100, 8, UStatConstants::Theory { c1: 0.0, c2: 3.0 });
    assert_eq!(r, 0.0);
}

#[test]
fn pauli_z_examples() {
    let z = pauli_z_constant(0.05, 1.0).unwrap();
    assert!((z - 56.0 / 3.0 * 120f64.ln()).abs() < 1e-10);
    assert!((z - 89.36).abs() < 0.01);
    assert!(pauli_z_constant(6.0 / std::f64::consts::E, 1.0).is_err());
    assert!(pauli_z_constant(0.05, 0.0).is_err());
    // 2 exp(-C z) = alpha / 3
    let c = 3.0 / 56.0;
    assert!((2.0 * (-c * z).exp() - 0.05 / 3.0).abs() < 1e-15);
}

#[test]
fn reavg_noiseless_at_truth() {
    let mut rng = rng_from(4);
    let rho = random_rank_k_state(4, 2, &mut rng).unwrap();
    let plan = full_basis_plan(DesignEnsemble::pauli(4).unwrap(), 2).unwrap();
    let b = measure_gaussian(&plan, rho.matrix(), 0.0, &mut rng).unwrap();
    let rep = reavg_confidence_set(&b, rho.matrix(), 0.0, 0.05).unwrap();
    assert!(rep.statistic_value.abs() < 1e-12);
    assert!(rep.radius_sq < 1e-12);
}

#[test]
fn reavg_single_pass_is_full_basis_rss() {
    // with m = 1, Z~_k = Y_k - tr(X^k center) and the statistic is the RSS
    let mut rng = rng_from(5);
    let rho = random_rank_k_state(2, 1, &mut rng).unwrap();
    let center = random_rank_k_state(2, 2, &mut rng).unwrap();
    let plan = full_basis_plan(DesignEnsemble::pauli(2).unwrap(), 1).unwrap();
    let b = measure_gaussian(&plan, rho.matrix(), 0.2, &mut rng).unwrap();
    let re = reavg_statistic(&b, center.matrix(), 0.2).unwrap();
    let rss = rss_statistic(&b, center.matrix(), 0.2).unwrap();
    assert!((re - rss).abs() < 1e-12);
    // hand expansion: sum_k (y_k - 2 tr(E_k center))^2 / 4 - sigma^2
    let mut hand = 0.0;
    for k in 0..4 {
        let e = crate::sensing::PauliString::from_index(1, k).unwrap().to_matrix();
        let r = b.y()[k] - 2.0 * e.inner(center.matrix());
        hand += r * r;
    }
    assert!((re - (hand / 4.0 - 0.04)).abs() < 1e-12);
}

#[test]
fn reavg_rejects_unbalanced() {
    let ens = DesignEnsemble::pauli(2).unwrap();
    let plan = SensingPlan::from_pauli_indices(ens, vec![0, 1, 2, 2]).unwrap();
    let b = MeasurementBatch::from_parts(plan, vec![0.0; 4], NoiseModel::Gaussian { sigma: 0.0 }, 1).unwrap();
    assert!(matches!(reavg_statistic(&b, &HermitianMatrix::zeros(2), 0.0), Err(Error::NotFullBasis(_))));
    let plan = SensingPlan::from_pauli_indices(ens, vec![0, 1, 2]).unwrap();
    let b = MeasurementBatch::from_parts(plan, vec![0.0; 3], NoiseModel::Gaussian { sigma: 0.0 }, 1).unwrap();
    assert!(matches!(reavg_statistic(&b, &HermitianMatrix::zeros(2), 0.0), Err(Error::NotFullBasis(_))));
}

#[test]
fn paired_examples() {
    let ens = DesignEnsemble::pauli(2).unwrap();
    // n = 2: one pair, <X, center> = 1, Y = (1, 2)
    let plan = SensingPlan::from_pauli_indices(ens, vec![0, 0]).unwrap();
    let center = HermitianMatrix::identity(2).scaled(0.5 / 2f64.sqrt());
    let b = MeasurementBatch::from_parts(plan, vec![1.0, 2.0], NoiseModel::Gaussian { sigma: 1.0 }, 1).unwrap();
    assert!(paired_rss_statistic(&b, &center).unwrap().abs() < 1e-14);
    let bad = SensingPlan::from_pauli_indices(ens, vec![0, 1]).unwrap();
    let b = MeasurementBatch::from_parts(bad, vec![1.0, 2.0], NoiseModel::Gaussian { sigma: 1.0 }, 1).unwrap();
    assert!(matches!(paired_rss_statistic(&b, &center), Err(Error::PairingViolated(0))));
    let mut rng = rng_from(6);
    let rho = random_rank_k_state(2, 1, &mut rng).unwrap();
    let p = draw_plan(ens, 10, &mut rng).unwrap().duplicated();
    let b = measure_gaussian(&p, rho.matrix(), 0.0, &mut rng).unwrap();
    assert!(paired_rss_statistic(&b, rho.matrix()).unwrap().abs() < 1e-14);
}

#[test]
fn membership_is_the_inequality() {
    let mut rng = rng_from(7);
    let rho = random_rank_k_state(4, 1, &mut rng).unwrap();
    let plan = draw_plan(DesignEnsemble::pauli(4).unwrap(), 100, &mut rng).unwrap();
    let b = measure_gaussian(&plan, rho.matrix(), 0.1, &mut rng).unwrap();
    let center = QuantumStateFixture::mixed(4);
    let rep = rss_confidence_set(&b, &center, 0.1, 0.05, RssMode::ImplicitSolve, 0.0).unwrap();
    for _ in 0..50 {
        let v = random_rank_k_state(4, 2, &mut rng).unwrap().into_matrix();
        assert_eq!(rep.contains(&v), center.dist_frobenius(&v).powi(2) <= rep.radius_sq);
    }
    let row = rep.csv_row(Some(rho.matrix()));
    assert_eq!(row.split(',').count(), REPORT_CSV_HEADER.split(',').count());
}

struct QuantumStateFixture;
impl QuantumStateFixture {
    fn mixed(d: usize) -> HermitianMatrix {
        crate::matrix::QuantumState::maximally_mixed(d).into_matrix()
    }
}

/// Monte Carlo mean and standard error of a statistic over fresh batches.
fn mc<F: FnMut(&mut crate::seed::Rng) -> f64>(reps: usize, seed0: u64, mut f: F) -> (f64, f64) {
    let mut rng = rng_from(seed0);
    let v: Vec<f64> = (0..reps).map(|_| f(&mut rng)).collect();
    let m = v.iter().sum::<f64>() / reps as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps - 1) as f64;
    (m, (var / reps as f64).sqrt())
}

#[test]
fn statistics_unbiased_small() {
    let mut rng = rng_from(8);
    let theta = random_real_rank_k_state(3, 1, &mut rng).unwrap().into_matrix();
    let center = HermitianMatrix::zeros(3);
    let target = theta.frobenius_norm_sq();
    let ens = DesignEnsemble::gaussian(3).unwrap();
    let (m, se) = mc(2000, 9, |r| {
        let p = draw_plan(ens, 20, r).unwrap();
        let b = measure_gaussian(&p, &theta, 0.5, r).unwrap();
        rss_statistic(&b, &center, 0.5).unwrap()
    });
    assert!((m - target).abs() <= 3.0 * se + 1e-12, "rss {m} ± {se} vs {target}");
    let (m, se) = mc(2000, 10, |r| {
        let p = draw_plan(ens, 20, r).unwrap();
        let b = measure_gaussian(&p, &theta, 0.5, r).unwrap();
        ustat_statistic(&b, &center).unwrap()
    });
    assert!((m - target).abs() <= 3.0 * se + 1e-12, "ustat {m} ± {se} vs {target}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn radii_monotone(stat in -0.5f64..2.0, bump in 0.0f64..1.0, n in 2usize..5000, dn in 1usize..500,
                      sigma in 0.0f64..2.0, alpha in 0.01f64..0.5) {
        let d = 4;
        for mode in [RssMode::ShapeConstrained, RssMode::ImplicitSolve] {
            for z in [0.0, 10.0] {
                let base = rss_radius_sq(stat, n, d, sigma, alpha, mode, z).unwrap();
                prop_assert!(rss_radius_sq(stat + bump, n, d, sigma, alpha, mode, z).unwrap() >= base - 1e-12);
                prop_assert!(rss_radius_sq(stat, n + dn, d, sigma, alpha, mode, z).unwrap() <= base + 1e-12);
            }
        }
        let c = SimulationConstants::default();
        let u = UStatConstants::simulation(&c);
        prop_assert!(ustat_radius_sq(stat + bump, n, d, u) >= ustat_radius_sq(stat, n, d, u) - 1e-12);
        prop_assert!(ustat_radius_sq(stat, n + dn, d, u) <= ustat_radius_sq(stat, n, d, u) + 1e-12);
        let s = rss_simulation_radius_sq(stat, n, sigma, &c);
        prop_assert!(rss_simulation_radius_sq(stat + bump, n, sigma, &c) >= s - 1e-12);
        prop_assert!(rss_simulation_radius_sq(stat, n + dn, sigma, &c) <= s + 1e-12);
        let r = reavg_radius_sq(stat, 16 * n, d, sigma, alpha).unwrap();
        prop_assert!(reavg_radius_sq(stat + bump, 16 * n, d, sigma, alpha).unwrap() >= r - 1e-12);
        prop_assert!(reavg_radius_sq(stat, 16 * (n + dn), d, sigma, alpha).unwrap() <= r + 1e-12);
        prop_assert!(r >= 0.0);
    }
}
