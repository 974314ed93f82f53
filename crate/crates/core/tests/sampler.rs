mod common;

use std::collections::HashMap;

use common::{reference_posterior_k, total_variation};
use mfm_core::diagnostics::{exact_posterior_k, ExactPosterior};
use mfm_core::rng::chain_rng;
use mfm_core::sampler::{
    canonical_labels, draw_cluster_precisions, draw_k_given_t, run_chain_with, split_merge_move,
    LaunchState, MoveCounter,
};
use mfm_core::{
    posterior_k_given_partition, run_chain, BetaSpec, ChainConfig, CoefficientTable,
    ComponentCountPrior, Matrix, ModelConfig, PartitionState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Gamma};

const TOY: [f64; 6] = [-1.8, -1.1, 0.3, 1.4, 2.2, 2.9];

fn toy(n: usize) -> Matrix {
    Matrix::column_vector(TOY[..n].to_vec())
}

fn toy_config(prior: ComponentCountPrior) -> ModelConfig {
    ModelConfig {
        mean: vec![0.5],
        c: vec![0.3],
        alpha: 2.0,
        beta: BetaSpec::Fixed { beta: 1.0 },
        gamma: 1.0,
        count_prior: prior,
    }
}

fn chain(iterations: usize, seed: u64, splitmerge: usize) -> ChainConfig {
    ChainConfig {
        iterations,
        burn_in: 1000,
        seed,
        splitmerge_per_sweep: splitmerge,
        restricted_scans: 3,
        record_every: 1,
    }
}

/// Standard error of the mean of `xs` by 50 batch means.
fn batch_se(xs: &[f64]) -> f64 {
    let batches = 50;
    let len = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let mu = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

fn check_partition_frequencies(visits: &[Vec<usize>], exact: &ExactPosterior, label: &str) {
    let mut seen: HashMap<Vec<usize>, ()> = HashMap::new();
    for v in visits {
        seen.insert(v.clone(), ());
    }
    for labels in seen.keys() {
        let indicator: Vec<f64> = visits.iter().map(|v| f64::from(u8::from(v == labels))).collect();
        let freq = indicator.iter().sum::<f64>() / visits.len() as f64;
        let want = exact.partition_probability(labels);
        let se = batch_se(&indicator).max(1e-4);
        assert!(
            (freq - want).abs() <= 3.0 * se,
            "{label}: partition {labels:?} frequency {freq:.4} vs exact {want:.4} (se {se:.4})"
        );
    }
}

#[test]
fn gibbs_partition_frequencies_match_enumeration() {
    let data = toy(3);
    let cfg = toy_config(ComponentCountPrior::Geometric { r: 0.1 });
    let exact = exact_posterior_k(&data, &cfg, 1.0).unwrap();
    let mut visits = Vec::new();
    run_chain_with(&data, &cfg, &chain(101_000, 3, 0), |s, _| visits.push(s.canonical_labels())).unwrap();
    assert_eq!(visits.len(), 100_000);
    check_partition_frequencies(&visits, &exact, "gibbs");
}

#[test]
fn split_merge_alone_targets_the_partition_posterior() {
    let data = toy(4);
    let cfg = toy_config(ComponentCountPrior::Geometric { r: 0.2 });
    let exact = exact_posterior_k(&data, &cfg, 1.0).unwrap();
    let mut rng = chain_rng(11);
    let mut table = CoefficientTable::with_defaults(cfg.count_prior, cfg.gamma, 4).unwrap();
    let mut state = PartitionState::init(&data, &cfg, &mut rng).unwrap();
    let mut counter = MoveCounter::default();
    let mut visits = Vec::new();
    for it in 0..201_000 {
        split_merge_move(&mut state, &data, cfg.gamma, &mut table, &mut rng, 2, &mut counter).unwrap();
        if it >= 1000 {
            visits.push(state.canonical_labels());
        }
    }
    assert!(counter.accepted > 0 && counter.accepted < counter.proposed);
    check_partition_frequencies(&visits, &exact, "split-merge");
}

#[test]
fn component_draws_follow_their_posterior() {
    let prior = ComponentCountPrior::Geometric { r: 0.1 };
    let (n, t) = (20, 3);
    let post = posterior_k_given_partition(&prior, 1.0, n, t, 1e-12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 100_000;
    let mut counts = vec![0usize; 200];
    for _ in 0..draws {
        counts[draw_k_given_t(&prior, 1.0, n, t, &mut rng).unwrap()] += 1;
    }
    for (k, &count) in counts.iter().enumerate().take(12).skip(1) {
        let p = post.prob(k);
        let freq = count as f64 / draws as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt().max(1e-6);
        assert!((freq - p).abs() <= 3.0 * se, "k={k}: {freq} vs {p}");
    }
    assert_eq!(counts[1] + counts[2], 0);
}

#[test]
fn precision_draws_follow_their_gamma_conditional() {
    // One cluster holding every point, so each draw uses the same Gamma.
    let data = toy(6);
    let cfg = toy_config(ComponentCountPrior::Geometric { r: 0.1 });
    let state = PartitionState::from_labels(&data, &cfg, &[0; 6], 1.5).unwrap();
    let (shape, rate) = state.kernel().precision_posterior(state.cluster(state.label(0)).unwrap().stats(), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut draws: Vec<f64> = (0..20_000)
        .map(|_| draw_cluster_precisions(&state, &mut rng).unwrap()[0])
        .collect();
    draws.sort_by(f64::total_cmp);
    let dist = Gamma::new(shape, rate).unwrap();
    let n = draws.len() as f64;
    let ks = draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample KS statistic.
    assert!(ks < 1.63 / n.sqrt(), "KS distance {ks}");
}

#[test]
fn forced_scan_reproduces_the_proposal_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let data = Matrix::column_vector((0..12).map(|_| rng.random_range(-4.0..4.0)).collect());
    let cfg = toy_config(ComponentCountPrior::Geometric { r: 0.1 });
    let state = PartitionState::from_labels(&data, &cfg, &[0; 12], 0.8).unwrap();
    let kernel = state.kernel();
    for trial in 0..20 {
        let members: Vec<usize> = (2..12).collect();
        let launch = LaunchState::launch(kernel, &data, 0, 1, members, 3, &mut rng).unwrap();
        let mut free = launch.clone();
        let log_q = free.scan(kernel, &data, &mut rng).unwrap();
        let mut forced = launch.clone();
        let replay = forced.scan_to(kernel, &data, free.in_a()).unwrap();
        assert!((log_q - replay).abs() < 1e-12, "trial {trial}: {log_q} vs {replay}");
        assert_eq!(forced.in_a(), free.in_a());
        assert!(forced.stats_a().approx_eq(free.stats_a(), 1e-12));
    }
}

#[test]
fn chain_matches_exact_posterior_on_tiny_data() {
    let priors = [
        ComponentCountPrior::Geometric { r: 0.1 },
        ComponentCountPrior::UniformBounded { max_k: 4 },
    ];
    for n in [4, 6] {
        let data = toy(n);
        for prior in priors {
            let cfg = toy_config(prior);
            let exact = exact_posterior_k(&data, &cfg, 1.0).unwrap();
            let reference = reference_posterior_k(&data, &cfg, 1.0, exact.posterior_k.len());
            assert!(total_variation(&exact.posterior_k, &reference) < 1e-9);
            for splitmerge in [0, 1] {
                let out = run_chain(&data, &cfg, &chain(101_000, 17, splitmerge)).unwrap();
                let tv = total_variation(&out.posterior_k, &exact.posterior_k);
                assert!(tv <= 0.02, "N={n} {prior:?} sm={splitmerge}: TV {tv}");
            }
        }
    }
}

#[test]
fn same_seed_same_draws() {
    let data = toy(6);
    let cfg = ModelConfig {
        beta: BetaSpec::Hyperprior { shape: 0.2, rate: 2.0 },
        ..toy_config(ComponentCountPrior::Geometric { r: 0.1 })
    };
    let a = run_chain(&data, &cfg, &chain(3000, 4, 1)).unwrap();
    let b = run_chain(&data, &cfg, &chain(3000, 4, 1)).unwrap();
    let c = run_chain(&data, &cfg, &chain(3000, 5, 1)).unwrap();
    assert!(a.same_draws(&b));
    assert!(!a.same_draws(&c));
    assert!(a.trace_beta.iter().all(|&b| b > 0.0));
    assert!(a.trace_beta.windows(2).any(|w| w[0] != w[1]));
}

#[test]
fn bounded_prior_never_exceeds_its_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let data = Matrix::column_vector((0..60).map(|i| (i % 12) as f64 * 5.0 + rng.random::<f64>()).collect());
    let cfg = ModelConfig {
        mean: vec![27.5],
        c: vec![0.01],
        alpha: 2.0,
        beta: BetaSpec::Fixed { beta: 0.1 },
        gamma: 1.0,
        count_prior: ComponentCountPrior::UniformBounded { max_k: 6 },
    };
    let mut max_t = 0;
    let mut max_k = 0;
    run_chain_with(&data, &cfg, &chain(3000, 2, 1), |s, k| {
        max_t = max_t.max(s.t());
        max_k = max_k.max(k);
    })
    .unwrap();
    assert!(max_t <= 6 && max_k <= 6, "t {max_t} k {max_k}");
    // Twelve separated groups: the bound should be hit.
    assert_eq!(max_t, 6);
}

#[test]
fn relabeling_is_canonical() {
    assert_eq!(canonical_labels(&[5, 5, 2, 9, 2]), vec![0, 0, 1, 2, 1]);
}
