use serde::{Deserialize, Serialize};

use crate::coefficients::{posterior_k_given_partition, CoefficientTable, DEFAULT_TOL};
use crate::error::{MfmError, Result};
use crate::matrix::Matrix;
use crate::model::{ClusterKernel, ModelConfig};
use crate::numerics::{ln_rising_factorial, log_sum_exp};
use crate::suffstats::SuffStats;

/// Largest data set enumerated exactly (Bell(10) = 115,975 partitions).
pub const MAX_EXACT_N: usize = 10;

/// Iterator over set partitions of `{0..n}` as restricted-growth strings:
/// `a[0] = 0` and `a[i] <= 1 + max(a[..i])`.
#[derive(Debug, Clone)]
pub struct RestrictedGrowth {
    labels: Vec<usize>,
    /// `prefix_max[i] = max(labels[..=i])`.
    prefix_max: Vec<usize>,
    done: bool,
}

impl RestrictedGrowth {
    pub fn new(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            prefix_max: vec![0; n],
            done: n == 0,
        }
    }
}

impl Iterator for RestrictedGrowth {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.labels.clone();
        let n = self.labels.len();
        // Advance: rightmost position that can still grow.
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.labels[i] <= self.prefix_max[i - 1] {
                self.labels[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.labels[i]);
                for j in i + 1..n {
                    self.labels[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                break;
            }
        }
        Some(current)
    }
}

/// A restricted-growth string packed four bits per element (`n <= 16`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartitionCode(pub u64);

impl PartitionCode {
    pub fn encode(labels: &[usize]) -> Self {
        debug_assert!(labels.len() <= 16);
        Self(
            labels
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &l)| acc | ((l as u64 & 0xF) << (4 * i))),
        )
    }

    pub fn decode(self, n: usize) -> Vec<usize> {
        (0..n).map(|i| ((self.0 >> (4 * i)) & 0xF) as usize).collect()
    }
}

/// Exact posterior over partitions, clusters and components for a tiny data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactPosterior {
    pub n: usize,
    /// Every set partition with its unnormalized log joint weight.
    pub partitions: Vec<(PartitionCode, f64)>,
    pub log_normalizer: f64,
    /// `posterior_t[t - 1] = p(t | X)`.
    pub posterior_t: Vec<f64>,
    /// `posterior_k[k - 1] = p(k | X)`.
    pub posterior_k: Vec<f64>,
}

impl ExactPosterior {
    /// Posterior probability of the partition given by `labels` (any labeling).
    pub fn partition_probability(&self, labels: &[usize]) -> f64 {
        let code = PartitionCode::encode(&crate::sampler::canonical_labels(labels));
        self.partitions
            .iter()
            .find(|(c, _)| *c == code)
            .map_or(0.0, |(_, w)| (w - self.log_normalizer).exp())
    }
}

/// Enumerates all set partitions of the rows of `data` (at most [`MAX_EXACT_N`]),
/// weighting each by `V_n(t) Π_c gamma^(n_c) Π_c m(X_c)` at rate `beta`, and mixes
/// `p(k | t, n)` over the normalized partition posterior.
pub fn exact_posterior_k(data: &Matrix, cfg: &ModelConfig, beta: f64) -> Result<ExactPosterior> {
    cfg.validate()?;
    let n = data.rows();
    if n == 0 || n > MAX_EXACT_N {
        return Err(MfmError::input(format!(
            "exact enumeration needs 1..={MAX_EXACT_N} rows, got {n}"
        )));
    }
    if data.cols() != cfg.dim() {
        return Err(MfmError::input("data and model dimensions differ"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(MfmError::input(format!("beta must be > 0, got {beta}")));
    }
    let table = CoefficientTable::build(cfg.count_prior, cfg.gamma, n, n, DEFAULT_TOL)?;
    let kernel = ClusterKernel::new(cfg, beta, n);
    let dim = data.cols();

    let mut partitions = Vec::new();
    let mut log_weight_by_t = vec![Vec::new(); n];
    for labels in RestrictedGrowth::new(n) {
        let t = labels.iter().max().map_or(0, |m| m + 1);
        let mut stats = vec![SuffStats::empty(dim); t];
        for (i, &l) in labels.iter().enumerate() {
            stats[l].add(data.row(i));
        }
        let log_v = table.log_v(t).expect("table covers 1..=n");
        let w = if log_v == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            log_v
                + stats
                    .iter()
                    .map(|s| ln_rising_factorial(cfg.gamma, s.n()) + kernel.log_marginal(s))
                    .sum::<f64>()
        };
        partitions.push((PartitionCode::encode(&labels), w));
        log_weight_by_t[t - 1].push(w);
    }
    let log_by_t: Vec<f64> = log_weight_by_t.iter().map(|w| log_sum_exp(w)).collect();
    let log_normalizer = log_sum_exp(&log_by_t);
    if !log_normalizer.is_finite() {
        return Err(MfmError::OutsideSupport("every partition has zero weight".into()));
    }
    let posterior_t: Vec<f64> = log_by_t.iter().map(|w| (w - log_normalizer).exp()).collect();

    let mut posterior_k: Vec<f64> = Vec::new();
    for (idx, &pt) in posterior_t.iter().enumerate() {
        if pt == 0.0 {
            continue;
        }
        let given_t = posterior_k_given_partition(&cfg.count_prior, cfg.gamma, n, idx + 1, DEFAULT_TOL)?;
        if posterior_k.len() < given_t.probs.len() {
            posterior_k.resize(given_t.probs.len(), 0.0);
        }
        for (slot, p) in posterior_k.iter_mut().zip(&given_t.probs) {
            *slot += pt * p;
        }
    }
    Ok(ExactPosterior {
        n,
        partitions,
        log_normalizer,
        posterior_t,
        posterior_k,
    })
}
