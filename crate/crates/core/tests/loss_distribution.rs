use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use parisk::montecarlo::{mc_gamma3, McConfig};
use parisk::risk::{
    epsilon0_for_target_case1, epsilon_for_gamma1, gamma1, gamma1_closed_k1, gamma3,
};
use parisk::LossDistribution;

/// |G1 - G2| for G_i ~ Gamma(k, 1), drawn with an independent sampler.
fn gamma_differences(k: u32, n: usize, seed: u64) -> Vec<f64> {
    let g = Gamma::new(k as f64, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n)
        .map(|_| (g.sample(&mut rng) - g.sample(&mut rng)).abs())
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn cdf_matches_simulated_gamma_differences() {
    let n = 400_000;
    for k in [2, 3, 6] {
        let sims = gamma_differences(k, n, 40 + k as u64);
        let d = LossDistribution::new(k).unwrap();
        for t in [0.1, 0.5, 1.0, 2.5, 5.0] {
            let empirical = sims.partition_point(|x| *x <= t) as f64 / n as f64;
            let exact = d.cdf(t).unwrap();
            let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
            assert!(
                (empirical - exact).abs() < 5.0 * sigma + 1e-4,
                "k={k} t={t}: {empirical} vs {exact}"
            );
        }
    }
}

#[test]
fn quantiles_match_simulation() {
    let n = 400_000;
    let sims = gamma_differences(4, n, 99);
    let d = LossDistribution::new(4).unwrap();
    for p in [0.1, 0.5, 0.9] {
        let q = d.quantile(p).unwrap();
        let empirical = sims.partition_point(|x| *x <= q) as f64 / n as f64;
        assert!((empirical - p).abs() < 5.0 * (p * (1.0 - p) / n as f64).sqrt());
    }
}

#[test]
fn closed_form_and_numeric_agree() {
    for (eps, eps0) in [(0.01, 0.02), (0.3, 0.9), (1.9, 4.0), (7.0, 8.0)] {
        let a = gamma1(eps, eps0, 1).unwrap();
        let b = gamma1_closed_k1(eps, eps0).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn higher_dimensions_lower_confidence() {
    // larger k spreads T, so less of its truncated mass sits below eps
    let mut prev = 1.0;
    for k in 1..=6 {
        let g = gamma1(0.3, 1.0, k).unwrap();
        assert!(g < prev);
        prev = g;
    }
}

#[test]
fn inversions_round_trip() {
    for k in [1, 2, 5] {
        let eps = epsilon_for_gamma1(0.6, 1.2, k).unwrap();
        assert!((gamma1(eps, 1.2, k).unwrap() - 0.6).abs() < 1e-9);
    }
    let eps0 = epsilon0_for_target_case1(0.4, 0.6, 1).unwrap();
    assert!((eps0 - 0.79732).abs() < 1e-4);
    assert!((gamma1(0.4, eps0, 1).unwrap() - 0.6).abs() < 1e-8);
}

#[test]
fn coupled_case_matches_simulation() {
    let cfg = McConfig::new(600_000, 5);
    for (k, eps, eps0, eta, g2) in [(1, 0.3, 0.5, 1.2, 0.9), (3, 0.8, 1.0, 1.5, 0.7)] {
        let analytic = gamma3(eps, eps0, k, eta, g2).unwrap();
        let mc = mc_gamma3(eps, eps0, k, eta, g2, &cfg).unwrap();
        assert!((analytic - mc.estimate).abs() < (4.0 * mc.stderr).max(0.005));
    }
}
