mod common;

use common::{brute_log_v, brute_posterior_k, quadrature_log_marginal, ref_log_marginal_1d};
use mfm_core::model::mean_precision_scale;
use mfm_core::{
    cluster_log_marginal, log_predictive, posterior_k_given_partition, BetaSpec, CoefficientTable,
    ComponentCountPrior, ModelConfig, SuffStats,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn geometric(r: f64) -> ComponentCountPrior {
    ComponentCountPrior::Geometric { r }
}

/// 30 (prior, gamma, n, t) cases: every gamma with every (n, t), priors cycling.
fn coefficient_cases() -> Vec<(ComponentCountPrior, f64, usize, usize)> {
    let priors = [geometric(0.1), geometric(0.5), ComponentCountPrior::UniformBounded { max_k: 6 }];
    let grid = [(1, 1), (5, 2), (20, 3), (50, 5), (50, 1), (12, 4), (33, 5), (2, 2), (8, 1), (40, 3)];
    let mut cases = Vec::new();
    for (i, &(n, t)) in grid.iter().enumerate() {
        for (j, &gamma) in [0.5, 1.0, 2.0].iter().enumerate() {
            cases.push((priors[(i + j) % 3], gamma, n, t));
        }
    }
    cases
}

#[test]
fn coefficient_table_matches_brute_force_summation() {
    let cases = coefficient_cases();
    assert_eq!(cases.len(), 30);
    let mut worst: f64 = 0.0;
    for (prior, gamma, n, t) in cases {
        let table = CoefficientTable::build(prior, gamma, n, t, 1e-14).unwrap();
        let got = table.log_v(t).unwrap();
        let want = brute_log_v(&prior, gamma, n, t, 4000);
        let rel = (got - want).exp_m1().abs();
        worst = worst.max(rel);
        assert!(rel <= 1e-10, "{prior:?} gamma={gamma} n={n} t={t}: {got} vs {want}");
    }
    eprintln!("worst relative coefficient error {worst:.2e}");
}

#[test]
fn bounded_coefficients_vanish_beyond_support() {
    let prior = ComponentCountPrior::UniformBounded { max_k: 3 };
    let table = CoefficientTable::build(prior, 1.0, 10, 6, 1e-12).unwrap();
    for t in 1..=3 {
        assert!(table.log_v(t).unwrap().is_finite());
    }
    for t in 4..=6 {
        assert_eq!(table.log_v(t), Some(f64::NEG_INFINITY));
    }
}

#[test]
fn posterior_given_partition_matches_brute_force() {
    for &(prior, gamma, n, t) in &[
        (geometric(0.1), 1.0, 10, 2),
        (geometric(0.3), 0.5, 25, 4),
        (ComponentCountPrior::UniformBounded { max_k: 6 }, 2.0, 40, 3),
    ] {
        let got = posterior_k_given_partition(&prior, gamma, n, t, 1e-14).unwrap();
        let want = brute_posterior_k(&prior, gamma, n, t, 3000);
        for (k, w) in want.iter().enumerate().take(60) {
            assert!((got.prob(k + 1) - w).abs() < 1e-12, "k={}: {} vs {w}", k + 1, got.prob(k + 1));
        }
    }
}

fn random_model(rng: &mut ChaCha8Rng) -> (f64, f64, f64, f64) {
    let m = rng.random_range(-3.0..3.0);
    let c = 10f64.powf(rng.random_range(-1.5..1.0));
    let alpha = rng.random_range(0.6..4.0);
    let beta = 10f64.powf(rng.random_range(-1.0..1.0));
    (m, c, alpha, beta)
}

fn config_1d(m: f64, c: f64, alpha: f64, beta: f64) -> ModelConfig {
    ModelConfig {
        mean: vec![m],
        c: vec![c],
        alpha,
        beta: BetaSpec::Fixed { beta },
        gamma: 1.0,
        count_prior: geometric(0.1),
    }
}

#[test]
fn cluster_marginal_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let (m, c, alpha, beta) = random_model(&mut rng);
        let n = 1 + case % 4;
        let xs: Vec<f64> = (0..n).map(|_| m + rng.random_range(-2.0..2.0)).collect();
        let stats = SuffStats::from_points(1, xs.iter().map(std::slice::from_ref));
        let got = cluster_log_marginal(&stats, &config_1d(m, c, alpha, beta), beta);
        let want = quadrature_log_marginal(&xs, m, c, alpha, beta);
        let rel = (got - want).exp_m1().abs();
        worst = worst.max(rel);
        assert!(rel <= 1e-6, "case {case}: {got} vs quadrature {want}");
    }
    eprintln!("worst relative marginal error {worst:.2e}");
}

#[test]
fn cluster_marginal_matches_reference_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let (m, c, alpha, beta) = random_model(&mut rng);
        let n = rng.random_range(1..40);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let stats = SuffStats::from_points(1, xs.iter().map(std::slice::from_ref));
        let got = cluster_log_marginal(&stats, &config_1d(m, c, alpha, beta), beta);
        let want = ref_log_marginal_1d(&xs, m, c, alpha, beta);
        assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn c_mapping_uses_inverse_precision_mean() {
    assert!((mean_precision_scale(0.01, 3.0, 2.0) - 0.03).abs() < 1e-15);
    assert!((mean_precision_scale(0.01, 3.0, 1.0) - 0.03).abs() < 1e-15);
    assert!((mean_precision_scale(0.01, 3.0, 0.5) - 0.06).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn posterior_k_sums_to_one(
        bounded in any::<bool>(),
        r in 0.01f64..0.99,
        max_k in 1usize..20,
        gamma in 0.1f64..5.0,
        n in 1usize..300,
        t_frac in 0.0f64..1.0,
    ) {
        let prior = if bounded {
            ComponentCountPrior::UniformBounded { max_k }
        } else {
            geometric(r)
        };
        let cap = if bounded { n.min(max_k) } else { n.min(30) };
        let t = 1 + ((cap - 1) as f64 * t_frac) as usize;
        let post = posterior_k_given_partition(&prior, gamma, n, t, 1e-12).unwrap();
        let total: f64 = post.probs.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12, "sum {}", total);
        prop_assert!(post.probs[..t - 1].iter().all(|&p| p == 0.0));
        prop_assert!(post.probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn predictive_is_a_ratio_of_marginals(
        xs in prop::collection::vec(-20.0f64..20.0, 0..12),
        x in -20.0f64..20.0,
        m in -5.0f64..5.0,
        c in 0.01f64..5.0,
        alpha in 0.5f64..4.0,
        beta in 0.05f64..10.0,
    ) {
        let cfg = config_1d(m, c, alpha, beta);
        let s = SuffStats::from_points(1, xs.iter().map(std::slice::from_ref));
        let with = s.with(&[x]);
        let lhs = log_predictive(&s, &[x], &cfg, beta);
        let rhs = cluster_log_marginal(&with, &cfg, beta) - cluster_log_marginal(&s, &cfg, beta);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn lazy_extension_equals_direct_build(
        r in 0.05f64..0.9,
        gamma in 0.2f64..3.0,
        n in 2usize..200,
        first in 1usize..10,
        more in 1usize..20,
    ) {
        let prior = geometric(r);
        let t_max = (first + more).min(n);
        let first = first.min(t_max);
        let mut lazy = CoefficientTable::build(prior, gamma, n, first, 1e-12).unwrap();
        lazy.extend_to(t_max).unwrap();
        let direct = CoefficientTable::build(prior, gamma, n, t_max, 1e-12).unwrap();
        for t in 1..=t_max {
            let (a, b) = (lazy.log_v(t).unwrap(), direct.log_v(t).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}
